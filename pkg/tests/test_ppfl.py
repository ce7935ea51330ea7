import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smhe.errors import ConfigError, MissingMaterialError, PlaintextRangeError
from smhe.ppfl import (
    FixedPointCodec,
    SimConfig,
    build_world,
    client_elimination_sweep,
    decode_aggregate,
    encode_gradient,
    run_attack_round,
    run_round,
    to_jsonl,
    update_model,
)
from smhe.ring import setup

SMALL = {"t": 2**40, "N": 1024}


def world(**kw):
    kw.setdefault("param_overrides", dict(SMALL))
    kw.setdefault("d", 1500)
    return build_world(SimConfig(**kw))


@pytest.fixture(scope="module")
def big_t():
    return setup(b"codec", "desk", N=1024, t=2**40)


# -- codec ----------------------------------------------------------------------

@settings(max_examples=200)
@given(st.lists(st.floats(min_value=-8, max_value=8, allow_nan=False), min_size=1, max_size=50))
def test_codec_roundtrip_error(values):
    c = FixedPointCodec(16)
    v = np.array(values)
    assert np.all(np.abs(c.decode(c.encode(v)) - v) <= 2.0 ** -17 * (1 + 1e-9))


@given(st.lists(st.integers(min_value=-(8 << 16), max_value=8 << 16), min_size=1, max_size=50))
def test_codec_codewords_fixed(words):
    c = FixedPointCodec(16)
    k = np.array(words, dtype=np.int64)
    assert np.array_equal(c.encode(c.decode(k)), k)


def test_codec_clamp():
    c = FixedPointCodec(16, clamp=1.0)
    assert c.encode([5.0])[0] == 1 << 16
    with pytest.raises(PlaintextRangeError):
        FixedPointCodec(16, clamp=1.0, clip=False).encode([5.0])


def test_encode_zero_vector(big_t):
    chunks = encode_gradient(np.zeros(100), FixedPointCodec(), big_t)
    assert len(chunks) == 1 and not chunks[0].any()


def test_encode_chunks(big_t):
    v = np.linspace(-1, 1, 2500)
    chunks = encode_gradient(v, FixedPointCodec(), big_t)
    assert len(chunks) == 3
    back = decode_aggregate(chunks, FixedPointCodec(), big_t, 2500)
    assert np.max(np.abs(back - v)) <= 2.0**-17


def test_sum_of_ten_units_fits(big_t):
    codec = FixedPointCodec(16)
    units = [encode_gradient(np.ones(8) * codec.clamp, codec, big_t)[0] for _ in range(10)]
    total = sum(u.astype(object) for u in units) % big_t.t
    back = decode_aggregate([np.array(total, dtype=np.int64)], codec, big_t, 8)
    assert np.allclose(back, 10 * codec.clamp)
    assert 10 * codec.clamp * codec.unit < big_t.t // 2


def test_desk_t_too_small_for_weighted_codewords():
    params = setup(b"codec", "desk", N=1024)
    with pytest.raises(PlaintextRangeError):
        encode_gradient(np.ones(4), FixedPointCodec(16), params)


# -- rounds ---------------------------------------------------------------------

def test_single_client_is_plain_sgd():
    w = world(n=1, eta=0.5, weights=[2.0])
    rep = run_round(w)
    g = w.client(1).gradient
    assert rep.max_abs_error <= 2.0**-16
    assert np.allclose(rep.model, -0.5 * (2.0 * g) / 2.0, atol=2.0**-16)
    assert np.array_equal(w.server.model, rep.model)


def test_weighted_aggregate_and_update():
    w = world(n=4, weights=[1.0, 2.0, 0.5, 3.0], eta=0.1)
    start = w.server.model.copy()
    rep = run_round(w)
    assert rep.max_abs_error <= 4 * 2.0**-16
    assert np.array_equal(rep.model, start - 0.1 * rep.aggregate / 6.5)
    assert w.server.round == 1
    assert all(np.array_equal(c.model, rep.model) for c in w.clients)


def test_update_formula():
    m = np.array([1.0, 2.0])
    assert np.array_equal(update_model(m, np.array([4.0, -2.0]), 0.5, 2.0), np.array([0.0, 2.5]))


def test_reports_deterministic():
    a = to_jsonl([run_round(world(n=3))], timing=False)
    b = to_jsonl([run_round(world(n=3))], timing=False)
    assert a == b
    assert '"wall_ns":null' in a
    timed = to_jsonl([run_round(world(n=3))])
    assert '"wall_ns":null' not in timed


def test_report_phases():
    rep = run_round(world(n=2))
    names = [p.name for p in rep.phases]
    assert names == ["client_encode", "client_encrypt", "server_expand", "server_aggregate",
                     "broadcast", "client_partdec", "server_merge"]
    recs = rep.records()
    assert all({"name", "wall_ns", "bytes_in", "bytes_out"} <= set(r) for r in recs)
    enc = rep.phases[1]
    assert enc.bytes_out == rep.phases[2].bytes_in > 0


def test_unresponsive_client():
    w = world(n=3)
    with pytest.raises(MissingMaterialError):
        run_round(w, unresponsive={2})


def test_cdks_mode_round():
    rep = run_round(world(n=3, mode="cdks"))
    assert rep.max_abs_error <= 3 * 2.0**-16


def test_ckks_round():
    rep = run_round(world(n=2, scheme="ckks"))
    assert rep.max_abs_error < 1e-3


# -- attack and elimination -----------------------------------------------------

def test_attack_modes():
    w = world(n=3, d=800)
    cdks = run_attack_round(w, "cdks", rounds=2)
    smhe = run_attack_round(w, "smhe", rounds=2)
    assert cdks.best() == 1.0
    assert smhe.worst() <= 0.01


def test_attack_on_zero_gradient():
    w = world(n=2, d=64, grad_sigma=0.0)
    rep = run_attack_round(w, "cdks")
    assert rep.best() == 1.0
    assert rep.samples[1][1] == [0] * 8


def test_elimination_sweep():
    w = world(n=8, d=300)
    rows = client_elimination_sweep(w, [0.0, 0.5, 0.875])
    assert [r["m"] for r in rows] == [8, 4, 1]
    assert all(r["ok"] for r in rows)
    assert w.server.round == 0


def test_rate_zero_matches_run_round():
    w = world(n=3, d=300)
    row = client_elimination_sweep(w, [0.0])[0]
    rep = run_round(w)
    assert row["max_abs_error"] == rep.max_abs_error


def test_config_validation():
    with pytest.raises(ConfigError):
        SimConfig(n=2, weights=[1.0])
    with pytest.raises(ConfigError):
        SimConfig(n=2, benign=[3])
    with pytest.raises(ConfigError):
        SimConfig(mode="open")
    with pytest.raises(ConfigError):
        SimConfig(elimination_rate=1.0)
    w = world(n=2)
    with pytest.raises(ConfigError):
        client_elimination_sweep(w, [1.0])


def test_config_from_mapping():
    cfg = SimConfig.from_mapping({"n": 5, "m": 3, "N": 1024, "seed": "abc", "sigma": 3.2})
    assert cfg.benign == [1, 2, 3]
    assert cfg.param_overrides == {"t": 2**40, "N": 1024, "sigma": 3.2}

"""Acceptance suite: one PASS/FAIL line per criterion, with runtime limits.

Run under pytest (lines are echoed in the terminal summary) or directly with
``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import functools
import math
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))
from oracles import crt_value, negacyclic_bigint, plain_negacyclic_mod_t  # noqa: E402

from smhe import evaluator as ev  # noqa: E402
from smhe import noise  # noqa: E402
from smhe.cli_io.wire import poly_bytes, wire_size  # noqa: E402
from smhe.encoding import bfv_noise  # noqa: E402
from smhe.gadget import decompose_ints, recompose  # noqa: E402
from smhe.keys import keygen  # noqa: E402
from smhe.masking import extend, mask_enc  # noqa: E402
from smhe.ppfl import SimConfig, build_world, run_attack_round, run_round, to_jsonl  # noqa: E402
from smhe.ring import Form, Poly, PolyVec, mul, setup  # noqa: E402
from smhe.ring.sampling import sample_uniform  # noqa: E402

RESULTS: list[str] = []


def _verdict(label: str, limit_s: float, check) -> None:
    t0 = time.perf_counter()
    try:
        ok, detail = check()
    except Exception as exc:
        ok, detail = False, f"raised {type(exc).__name__}: {exc}"
    elapsed = time.perf_counter() - t0
    status = "PASS" if ok and elapsed < limit_s else "FAIL"
    line = f"{status} [{label}] {detail} ({elapsed:.1f}s, limit {limit_s:.0f}s)"
    RESULTS.append(line)
    print(line, flush=True)
    assert ok, line
    assert elapsed < limit_s, line


@functools.lru_cache(maxsize=None)
def desk():
    return setup(b"acceptance", "desk")


@functools.lru_cache(maxsize=None)
def desk_parties(count: int = 8):
    rng = np.random.default_rng(2718)
    return tuple(keygen(desk(), rng, i) for i in range(1, count + 1))


def _rand_mu(params, rng):
    return rng.integers(0, params.t, params.N)


def _as_ints(p: Poly) -> list[int]:
    return crt_value(p.to_coeff().residues, p.ctx.primes)


# -- checks -------------------------------------------------------------------

def check_ring_oracle():
    params = setup(b"acceptance", "desk", N=1024)
    rng = np.random.default_rng(1)
    bad = 0
    for _ in range(200):
        a, b = sample_uniform(rng, params), sample_uniform(rng, params)
        if _as_ints(mul(a, b)) != negacyclic_bigint(_as_ints(a), _as_ints(b), params.Q):
            bad += 1
    return bad == 0, f"200 products at N=1024 vs big-integer oracle, {bad} mismatches"


def check_gadget_reconstruction():
    params = desk()
    rng = np.random.default_rng(2)
    bad, worst = 0, 0
    for _ in range(1000):
        a = sample_uniform(rng, params)
        ints = decompose_ints(a, params)
        worst = max(worst, int(np.abs(ints).max()))
        digits = PolyVec(params.ctx, params.ctx.from_ints(ints), Form.COEFF)
        bad += recompose(digits, params) != a
    ok = bad == 0 and worst <= params.B_H
    return ok, f"1000 elements, {bad} reconstruction failures, max digit {worst} <= B_H={params.B_H}"


def check_masking_cancellation():
    params = desk()
    rng = np.random.default_rng(3)
    bound = noise.masking_correctness(params)
    worst = 0
    for _ in range(100):
        own, other = keygen(params, rng, 1), keygen(params, rng, 2)
        m = mask_enc(own.pk, own.sk, params, rng)
        cx = extend(m.gamma, own.pk, other.pk, params)
        total = (cx.x0 + cx.x1 * own.sk.s) + (m.cz0 + m.cz1 * other.sk.s)
        worst = max(worst, total.inf_norm())
    ratio = worst / bound
    return worst <= bound, (f"100 key-pair trials, max 2^{math.log2(worst):.1f} vs bound "
                            f"2^{math.log2(bound):.1f}, ratio {ratio:.2e}")


def check_bfv_exactness():
    params = desk()
    p1, p2 = desk_parties()[:2]
    rng = np.random.default_rng(4)
    trips = adds = 0
    for _ in range(100):
        mu = _rand_mu(params, rng)
        b = ev.encrypt(mu, p1, params, rng)
        trips += np.array_equal(ev.decrypt(ev.expand(b, 1, 2), [p1.sk, p2.sk], params), mu)
    for _ in range(100):
        mu1, mu2 = _rand_mu(params, rng), _rand_mu(params, rng)
        b1, b2 = ev.encrypt(mu1, p1, params, rng), ev.encrypt(mu2, p2, params, rng)
        out = ev.add_two(ev.expand(b1, 1, 2), ev.expand(b2, 2, 2), p1.pk, p2.pk, b1.mask, b2.mask, params)
        adds += np.array_equal(ev.decrypt(out, [p1.sk, p2.sk], params), (mu1 + mu2) % params.t)
    return trips == 100 and adds == 100, f"round trips {trips}/100, two-party masked sums {adds}/100"


def check_general_addition():
    params = desk()
    parties = desk_parties()
    rng = np.random.default_rng(5)
    ok, notes = True, []
    for m in (2, 4, 8):
        ps = parties[:m]
        mus = [_rand_mu(params, rng) for _ in ps]
        bundles = [ev.encrypt(mu, p, params, rng) for mu, p in zip(mus, ps)]
        pks, masks = [p.pk for p in ps], [b.mask for b in bundles]
        agg = ev.expand(bundles[0], 1, m)
        for i in range(1, m):
            agg = ev.add(agg, ev.expand(bundles[i], i + 1, m), pks, masks, params)
        sks = [p.sk for p in ps]
        want = sum(mus) % params.t
        exact = np.array_equal(ev.decrypt(agg, sks, params), want)
        measured = bfv_noise(ev.decrypt_phase(agg, sks), want, params)
        bound = noise.aggregation(params, m)
        ok &= exact and measured <= bound
        notes.append(f"m={m} exact={exact} noise/bound={measured / bound:.2f}")
    return ok, "; ".join(notes)


def check_multiplication():
    params = desk()
    p1, p2 = desk_parties()[:2]
    evks, sks, pks = [p1.evk, p2.evk], [p1.sk, p2.sk], [p1.pk, p2.pk]
    rng = np.random.default_rng(6)
    t = params.t
    hits = {"expanded x expanded": 0, "masked x expanded": 0, "masked x masked": 0}
    for _ in range(20):
        a1, a2, c1, c2 = (_rand_mu(params, rng) for _ in range(4))
        A1, A2 = ev.encrypt(a1, p1, params, rng), ev.encrypt(a2, p2, params, rng)
        C1, C2 = ev.encrypt(c1, p1, params, rng), ev.encrypt(c2, p2, params, rng)
        eA1, eA2 = ev.expand(A1, 1, 2), ev.expand(A2, 2, 2)
        eC1, eC2 = ev.expand(C1, 1, 2), ev.expand(C2, 2, 2)
        left = ev.add(eA1, eA2, pks, [A1.mask, A2.mask], params)
        right = ev.add(eC1, eC2, pks, [C1.mask, C2.mask], params)
        a_sum, c_sum = (a1 + a2) % t, (c1 + c2) % t
        cases = {
            "expanded x expanded": (eA1, eA2, plain_negacyclic_mod_t(a1, a2, t)),
            "masked x expanded": (left, eC1, plain_negacyclic_mod_t(a_sum, c1, t)),
            "masked x masked": (left, right, plain_negacyclic_mod_t(a_sum, c_sum, t)),
        }
        for name, (x, y, want) in cases.items():
            got = ev.decrypt(ev.mult(x, y, evks, params), sks, params)
            hits[name] += np.array_equal(got, want)
    ok = all(v == 20 for v in hits.values())
    return ok, ", ".join(f"{k} {v}/20" for k, v in hits.items())


def check_leakage():
    cfg = dict(n=4, d=4096, seed="acceptance-attack")
    cdks = run_attack_round(build_world(SimConfig(mode="cdks", **cfg)), "cdks", rounds=20)
    smhe = run_attack_round(build_world(SimConfig(mode="smhe", **cfg)), "smhe", rounds=20)
    ok = cdks.best() == 1.0 and smhe.worst() <= 0.01
    return ok, (f"20 rounds x 4 clients: unmasked recovery min {cdks.best():.4f}, "
                f"masked recovery max {smhe.worst():.4f}")


def check_ppfl_end_to_end():
    cfg = SimConfig(n=4, d=4096, f=16, weights=[1.0, 2.0, 0.5, 1.5], seed="acceptance-ppfl")
    first, second = run_round(build_world(cfg)), run_round(build_world(cfg))
    tol = first.m * 2.0 ** -cfg.f
    same = to_jsonl([first], timing=False) == to_jsonl([second], timing=False)
    ok = first.max_abs_error <= tol and same
    return ok, f"max error {first.max_abs_error:.2e} <= {tol:.2e}, reports byte-identical={same}"


def check_size_linearity():
    params = desk()
    parties = desk_parties()
    rng = np.random.default_rng(9)
    sizes, polys = {}, {}
    for m in (2, 4, 8):
        ps = parties[:m]
        bundles = [ev.encrypt(_rand_mu(params, rng), p, params, rng) for p in ps]
        pks, masks = [p.pk for p in ps], [b.mask for b in bundles]
        agg = ev.expand(bundles[0], 1, m)
        for i in range(1, m):
            agg = ev.add(agg, ev.expand(bundles[i], i + 1, m), pks, masks, params)
        sizes[m] = wire_size(agg, params)
        polys[m] = (len(agg)) * poly_bytes(params)
    slope_a = (sizes[4] - sizes[2]) / 2
    slope_b = (sizes[8] - sizes[4]) / 4
    rest = {m: sizes[m] - polys[m] - 4 * m for m in sizes}
    ok = slope_a == slope_b and len(set(rest.values())) == 1 and polys[8] == 9 * poly_bytes(params)
    return ok, (f"bytes {sizes[2]}/{sizes[4]}/{sizes[8]} for m=2/4/8, slope {slope_a:.0f} = "
                f"{poly_bytes(params)} per polynomial + 4 per index, constant {rest[2]}")


def check_distributed_decryption():
    params = desk()
    parties = desk_parties()
    rng = np.random.default_rng(10)
    same = 0
    for trial in range(50):
        ps = parties[: 2 + trial % 2]
        n = len(ps)
        bundles = [ev.encrypt(_rand_mu(params, rng), p, params, rng) for p in ps]
        pks, masks = [p.pk for p in ps], [b.mask for b in bundles]
        agg = ev.expand(bundles[0], 1, n)
        for i in range(1, n):
            agg = ev.add(agg, ev.expand(bundles[i], i + 1, n), pks, masks, params)
        parts = [ev.part_dec(agg, p.index, p.sk, rng, params) for p in ps]
        same += np.array_equal(ev.merge(agg, parts, params), ev.decrypt(agg, [p.sk for p in ps], params))
    return same == 50, f"merge equals direct decryption on {same}/50 aggregates"


CHECKS = [
    ("ring-oracle", 30, check_ring_oracle),
    ("gadget-reconstruction", 10, check_gadget_reconstruction),
    ("masking-cancellation", 120, check_masking_cancellation),
    ("bfv-exactness", 120, check_bfv_exactness),
    ("general-addition", 300, check_general_addition),
    ("multiplication", 600, check_multiplication),
    ("leakage-regression", 300, check_leakage),
    ("ppfl-end-to-end", 300, check_ppfl_end_to_end),
    ("size-linearity", 60, check_size_linearity),
    ("distributed-decryption", 120, check_distributed_decryption),
]


def test_ring_oracle():
    _verdict(*CHECKS[0])


def test_gadget_reconstruction():
    _verdict(*CHECKS[1])


def test_masking_cancellation():
    _verdict(*CHECKS[2])


def test_bfv_exactness():
    _verdict(*CHECKS[3])


def test_general_addition_noise():
    _verdict(*CHECKS[4])


def test_multiplication():
    _verdict(*CHECKS[5])


def test_leakage_regression():
    _verdict(*CHECKS[6])


def test_ppfl_end_to_end():
    _verdict(*CHECKS[7])


def test_size_linearity():
    _verdict(*CHECKS[8])


def test_distributed_decryption():
    _verdict(*CHECKS[9])


if __name__ == "__main__":
    failed = 0
    for label, limit, check in CHECKS:
        try:
            _verdict(label, limit, check)
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)

"""In-process federated aggregation rounds over masked multi-key ciphertexts.

A round runs these phases in a fixed order:

    client_encode -> client_encrypt -> server_expand -> server_aggregate
    -> broadcast -> client_partdec -> server_merge

Clients sit at slots 1..n of every expanded ciphertext.  The server folds
the benign clients' ciphertexts in ring order: the first step pairs id_1
with id_m, step k pairs id_(k-1) with id_k.  Every random choice derives
from the master seed and (round, client, purpose), so two runs with the
same configuration produce identical reports.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
import time
from dataclasses import dataclass, field, fields

import numpy as np

from smhe import evaluator as ev
from smhe.cli_io.wire import serialize
from smhe.errors import ConfigError, MissingMaterialError
from smhe.keys import KeyPair, keygen
from smhe.masking import uni_enc
from smhe.ppfl.codec import FixedPointCodec, decode_aggregate, encode_gradient
from smhe.ring import BFV, Params, setup
from smhe.ring.params import SCHEMES

SMHE = "smhe"
CDKS = "cdks"
MODES = (SMHE, CDKS)

# purpose labels for seed derivation
_KEYS, _GRAD, _ENC, _PARTDEC, _SWEEP = range(5)


@dataclass
class SimConfig:
    n: int = 4
    d: int = 4096
    f: int = 16
    eta: float = 0.1
    rounds: int = 1
    mode: str = SMHE
    scheme: str = BFV
    profile: str = "desk"
    seed: str = "ppfl"
    weights: list[float] | None = None
    benign: list[int] | None = None
    elimination_rate: float = 0.0
    clamp: float = 8.0
    grad_sigma: float = 1.0
    # desk t=65537 cannot hold 2^16-scaled sums; 2^40 leaves ample headroom
    param_overrides: dict = field(default_factory=lambda: {"t": 2**40})

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("need at least one client")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}")
        if self.weights is not None:
            if len(self.weights) != self.n:
                raise ConfigError("one weight per client is required")
            if any(w <= 0 for w in self.weights):
                raise ConfigError("client weights must be positive")
        if self.benign is not None:
            bad = [i for i in self.benign if not 1 <= i <= self.n]
            if bad or not self.benign:
                raise ConfigError(f"benign set must be a non-empty subset of 1..{self.n}")
        if not 0 <= self.elimination_rate < 1:
            raise ConfigError("elimination_rate must lie in [0, 1)")

    @classmethod
    def from_mapping(cls, values: dict) -> "SimConfig":
        """Build from a parsed config file; parameter keys become setup overrides."""
        values = dict(values)
        own = {f.name for f in fields(cls)} - {"param_overrides"}
        if "m" in values:
            m = values.pop("m")
            values.setdefault("benign", list(range(1, m + 1)))
        kwargs = {k: values.pop(k) for k in list(values) if k in own}
        overrides = {"t": 2**40}
        overrides.update(values)
        return cls(**kwargs, param_overrides=overrides)


@dataclass
class ClientState:
    index: int
    keys: KeyPair
    weight: float
    gradient: np.ndarray
    model: np.ndarray


@dataclass
class ServerState:
    model: np.ndarray
    lr: float
    benign: list[int]
    round: int = 0


@dataclass
class World:
    config: SimConfig
    params: Params
    codec: FixedPointCodec
    clients: list[ClientState]
    server: ServerState

    def client(self, index: int) -> ClientState:
        return self.clients[index - 1]


@dataclass(frozen=True)
class PhaseRecord:
    name: str
    wall_ns: int
    bytes_in: int
    bytes_out: int


@dataclass
class RoundReport:
    round: int
    benign: list[int]
    phases: list[PhaseRecord]
    aggregate: np.ndarray
    expected: np.ndarray
    model: np.ndarray

    @property
    def m(self) -> int:
        return len(self.benign)

    @property
    def max_abs_error(self) -> float:
        return float(np.max(np.abs(self.aggregate - self.expected)))

    def records(self, timing: bool = True) -> list[dict]:
        out = []
        for p in self.phases:
            out.append({"round": self.round, "name": p.name,
                        "wall_ns": p.wall_ns if timing else None,
                        "bytes_in": p.bytes_in, "bytes_out": p.bytes_out})
        out.append({
            "round": self.round, "name": "summary",
            "wall_ns": sum(p.wall_ns for p in self.phases) if timing else None,
            "bytes_in": sum(p.bytes_in for p in self.phases),
            "bytes_out": sum(p.bytes_out for p in self.phases),
            "m": self.m, "benign": list(self.benign),
            "max_abs_error": self.max_abs_error,
            "aggregate_sha256": hashlib.sha256(self.aggregate.astype("<f8").tobytes()).hexdigest(),
            "model_sha256": hashlib.sha256(self.model.astype("<f8").tobytes()).hexdigest(),
        })
        return out


def to_jsonl(reports, timing: bool = True) -> str:
    """One JSON object per line; ``timing=False`` nulls the wall clock for byte-stable output."""
    lines = []
    for r in reports:
        for rec in r.records(timing):
            lines.append(json.dumps(rec, sort_keys=True, separators=(",", ":")))
    return "\n".join(lines) + "\n"


# -- construction -------------------------------------------------------------

def _master_entropy(seed: str | bytes) -> int:
    if isinstance(seed, str):
        seed = seed.encode()
    return int.from_bytes(hashlib.sha256(b"smhe-ppfl|" + seed).digest(), "little")


def _rng(world_or_seed, *labels: int) -> np.random.Generator:
    seed = world_or_seed.config.seed if isinstance(world_or_seed, World) else world_or_seed
    return np.random.default_rng(np.random.SeedSequence(_master_entropy(seed), spawn_key=labels))


def build_world(config: SimConfig) -> World:
    params = setup(config.seed, config.profile, config.scheme, **config.param_overrides)
    weights = config.weights or [1.0] * config.n
    clients = []
    for i in range(1, config.n + 1):
        keys = keygen(params, _rng(config.seed, _KEYS, i), i)
        clients.append(ClientState(i, keys, float(weights[i - 1]), np.zeros(config.d), np.zeros(config.d)))
    benign = sorted(config.benign) if config.benign else list(range(1, config.n + 1))
    server = ServerState(np.zeros(config.d), config.eta, benign)
    codec = FixedPointCodec(config.f, config.clamp)
    return World(config, params, codec, clients, server)


def synthetic_gradient(world: World, rnd: int, index: int) -> np.ndarray:
    g = _rng(world, _GRAD, rnd, index).normal(0.0, world.config.grad_sigma, world.config.d)
    return world.codec.clamp_values(g)


# -- round execution ----------------------------------------------------------

class _Phase:
    """Times one phase and collects its byte counts into ``sink`` on success."""

    def __init__(self, name: str, sink: list[PhaseRecord]):
        self.name, self.sink = name, sink
        self.bytes_in = self.bytes_out = 0

    def __enter__(self):
        self.t0 = time.perf_counter_ns()
        return self

    def __exit__(self, exc_type, *_):
        if exc_type is None:
            self.sink.append(PhaseRecord(self.name, time.perf_counter_ns() - self.t0,
                                         self.bytes_in, self.bytes_out))
        return False


@dataclass
class _Trace:
    """Everything a round produced, kept for reports and the attack observer."""

    benign: list[int]
    plaintexts: dict[int, list[np.ndarray]]
    fresh: dict[int, list]
    aggregates: list[ev.ExpandedCiphertext]
    partials: dict[int, list[ev.PartialDecryption]]
    decoded: np.ndarray
    records: list[PhaseRecord]


def aggregate_ring(expanded: dict[int, ev.ExpandedCiphertext], masks: dict[int, object],
                   pks: dict[int, object], benign: list[int], params: Params,
                   mode: str = SMHE) -> ev.ExpandedCiphertext:
    """Fold the benign clients' expanded ciphertexts in ring order."""
    ids = sorted(benign)
    if not ids:
        raise MissingMaterialError("no surviving clients to aggregate")
    if mode == CDKS:
        agg = expanded[ids[0]]
        for i in ids[1:]:
            agg = ev.cdks_add(agg, expanded[i], params)
        return agg
    if len(ids) == 1:
        return expanded[ids[0]]
    first = expanded[ids[0]]
    agg = ev.add(first, ev.zero_ciphertext(params, first.n, first.scale), pks, masks, params,
                 ref=[ids[0]], ref_prime=[ids[-1]])
    for prev, cur in zip(ids, ids[1:]):
        agg = ev.add(agg, expanded[cur], pks, masks, params, ref=[prev], ref_prime=[cur])
    return agg


def _execute(world: World, benign: list[int], rnd: int, mode: str, base: int,
             unresponsive=()) -> _Trace:
    params, cfg = world.params, world.config
    n = cfg.n
    records: list[PhaseRecord] = []
    plaintexts: dict[int, list[np.ndarray]] = {}

    with _Phase("client_encode", records):
        for i in benign:
            c = world.client(i)
            c.gradient = synthetic_gradient(world, rnd, i)
            plaintexts[i] = encode_gradient(c.gradient, world.codec, params, c.weight)

    fresh: dict[int, list] = {}
    masks: dict[int, list] = {}
    with _Phase("client_encrypt", records) as ph:
        for i in benign:
            rng = _rng(world, _ENC, base, rnd, i)
            keys = world.client(i).keys
            fresh[i] = []
            if mode == SMHE:
                masks[i] = []
            for mu in plaintexts[i]:
                if mode == SMHE:
                    b = ev.encrypt(mu, keys, params, rng)
                    fresh[i].append(b.ct)
                    masks[i].append(b.mask)
                    ph.bytes_out += len(serialize(b.mask, params))
                else:
                    fresh[i].append(uni_enc(mu, keys.pk, params, rng))
                ph.bytes_out += len(serialize(fresh[i][-1], params))
    uplink = ph.bytes_out

    chunks = len(plaintexts[benign[0]])
    with _Phase("server_expand", records) as ph:
        ph.bytes_in = uplink
        expanded = [{i: ev.expand(fresh[i][k], i, n) for i in benign} for k in range(chunks)]

    pks = {c.index: c.keys.pk for c in world.clients}
    with _Phase("server_aggregate", records):
        aggregates = [
            aggregate_ring(expanded[k], {i: masks[i][k] for i in masks}, pks, benign, params, mode)
            for k in range(chunks)
        ]

    agg_bytes = sum(len(serialize(a, params)) for a in aggregates)
    with _Phase("broadcast", records) as ph:
        ph.bytes_out = agg_bytes * len(benign)

    partials: dict[int, list[ev.PartialDecryption]] = {}
    with _Phase("client_partdec", records) as ph:
        ph.bytes_in = agg_bytes * len(benign)
        for i in benign:
            if i in unresponsive:
                continue
            rng = _rng(world, _PARTDEC, base, rnd, i)
            sk = world.client(i).keys.sk
            partials[i] = [ev.part_dec(a, i, sk, rng, params) for a in aggregates]
            ph.bytes_out += sum(len(serialize(p, params)) for p in partials[i])
    share_bytes = ph.bytes_out

    with _Phase("server_merge", records) as ph:
        ph.bytes_in = share_bytes
        merged = [ev.merge(a, [partials[i][k] for i in partials], params)
                  for k, a in enumerate(aggregates)]
        decoded = decode_aggregate(merged, world.codec, params, cfg.d)

    return _Trace(benign, plaintexts, fresh, aggregates, partials, decoded, records)


def _base_seed(rng) -> int:
    return 0 if rng is None else int(rng.integers(0, 2**63))


def run_round(world: World, rng: np.random.Generator | None = None, benign=None,
              update: bool = True, unresponsive=()) -> RoundReport:
    """One aggregation round; with ``update`` the global model takes the SGD step.

    ``rng`` only perturbs the per-round randomness; without it the round is
    fully determined by the master seed and the round counter.
    """
    benign = sorted(benign if benign is not None else world.server.benign)
    if not benign:
        raise MissingMaterialError("empty benign set")
    rnd = world.server.round
    trace = _execute(world, benign, rnd, world.config.mode, _base_seed(rng), unresponsive)
    expected = np.zeros(world.config.d)
    for i in benign:
        c = world.client(i)
        expected = expected + c.weight * c.gradient
    total_weight = sum(world.client(i).weight for i in benign)
    model = update_model(world.server.model, trace.decoded, world.server.lr, total_weight)
    if update:
        world.server.model = model
        world.server.round += 1
        for c in world.clients:
            c.model = model.copy()
    return RoundReport(rnd, benign, trace.records, trace.decoded, expected, model)


def update_model(model: np.ndarray, g_hat: np.ndarray, lr: float, total_weight: float) -> np.ndarray:
    """w_t = w_(t-1) - eta * g_hat / sum(alpha)."""
    return model - lr * g_hat / total_weight


def run_rounds(world: World, rounds: int | None = None) -> list[RoundReport]:
    return [run_round(world) for _ in range(rounds or world.config.rounds)]


# -- attack and elimination ---------------------------------------------------

@dataclass
class AttackReport:
    mode: str
    rounds: int
    recovery: dict[int, list[float]]
    # client -> (plaintext head, decoded head) from the last round
    samples: dict[int, tuple[list, list]] = field(default_factory=dict)

    def worst(self) -> float:
        return max(max(v) for v in self.recovery.values())

    def best(self) -> float:
        return min(min(v) for v in self.recovery.values())

    def records(self) -> list[dict]:
        return [{"name": "attack", "mode": self.mode, "client": i,
                 "recovery": [round(x, 6) for x in v]} for i, v in sorted(self.recovery.items())]


def run_attack_round(world: World, mode: str, rounds: int = 1, show: int = 8) -> AttackReport:
    """Replay rounds while an observer decodes c0^i + nu_i for every client.

    Recovery is the fraction of gradient entries whose decoded codeword
    equals the client's own encoded plaintext.
    """
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}")
    params, d = world.params, world.config.d
    benign = sorted(world.server.benign)
    recovery: dict[int, list[float]] = {i: [] for i in benign}
    samples = {}
    for r in range(rounds):
        trace = _execute(world, benign, world.server.round + r, mode, base=1_000_003 + r)
        for i in benign:
            hits = 0
            for k, ct in enumerate(trace.fresh[i]):
                got = ev.attack_recover(ct.c0, trace.partials[i][k], params, ct.scale)
                want = trace.plaintexts[i][k]
                if k == 0:
                    samples[i] = ([_plain(x) for x in want[:show]], [_plain(x) for x in got[:show]])
                if params.scheme == BFV:
                    hits += int(np.sum(got[:len(want)] == np.asarray(want) % params.t))
                else:
                    want_f = np.array([int(x) for x in want], dtype=np.float64) / ct.scale
                    hits += int(np.sum(np.abs(got[:len(want)] - want_f) <= 2.0 ** -world.config.f))
            recovery[i].append(hits / d)
    return AttackReport(mode, rounds, recovery, samples)


def _plain(x):
    return float(x) if isinstance(x, (float, np.floating)) else int(x)


def survivors(world: World, rate: float) -> list[int]:
    """Deterministically drop floor(rate * n) clients."""
    if not 0 <= rate < 1:
        raise ConfigError("elimination rate must lie in [0, 1)")
    n = world.config.n
    drop = math.floor(rate * n)
    order = _rng(world, _SWEEP, int(round(rate * 1_000_000))).permutation(np.arange(1, n + 1))
    keep = sorted(int(i) for i in order[drop:])
    if not keep:
        raise MissingMaterialError("no clients survive elimination")
    return keep


def client_elimination_sweep(world: World, rates) -> list[dict]:
    """One non-updating round per rate over the surviving clients."""
    rows = []
    for rate in rates:
        keep = survivors(world, rate)
        rep = run_round(world, benign=keep, update=False)
        tol = len(keep) * 2.0 ** (-world.config.f)
        rows.append({"rate": float(rate), "m": len(keep), "survivors": keep,
                     "max_abs_error": rep.max_abs_error, "tolerance": tol,
                     "ok": rep.max_abs_error <= tol})
    return rows


def clone_world(world: World) -> World:
    return copy.deepcopy(world)

"""Deployment parameters, shipped profiles and CRS derivation."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from smhe.errors import ParameterError
from smhe.ring.modarith import RingContext, find_ntt_primes, ring_context
from smhe.ring.poly import Form, PolyVec

BFV = "bfv"
CKKS = "ckks"
SCHEMES = (BFV, CKKS)

PROFILES: dict[str, dict] = {
    # Small enough that every acceptance check runs in minutes on one core.
    "desk": dict(N=2**12, num_primes=3, prime_bits=50, t=65537, sigma=3.2, tau=8,
                 ckks_scale=2**40),
    "full": dict(N=2**14, num_primes=8, prime_bits=50, t=65537, sigma=3.2, tau=8,
                 ckks_scale=2**40),
}

_OVERRIDABLE = {"N", "num_primes", "prime_bits", "t", "sigma", "tau", "ckks_scale",
                "scheme", "chi", "smudging_sigma"}


@dataclass(frozen=True, eq=False)
class Params:
    N: int
    primes: tuple[int, ...]
    aux_primes: tuple[int, ...]
    t: int
    sigma: float
    gauss_bound: int
    tau: int
    gadget_base: int
    B_chi: int
    B_H: int
    scheme: str
    ckks_scale: int
    chi: str
    smudging_sigma: float
    profile: str
    seed: bytes
    crs: PolyVec = field(repr=False)

    @property
    def ctx(self) -> RingContext:
        return ring_context(self.N, self.primes)

    @property
    def aux_ctx(self) -> RingContext:
        """Extended basis Q*P used for exact BFV tensor products."""
        return ring_context(self.N, self.primes + self.aux_primes)

    @property
    def Q(self) -> int:
        return self.ctx.Q

    @property
    def L(self) -> int:
        return len(self.primes)

    @property
    def noise_scale(self) -> int:
        """Magnitude bound for any small sample (key, mask or error)."""
        return max(self.B_chi, self.gauss_bound)

    def with_scheme(self, scheme: str) -> "Params":
        if scheme not in SCHEMES:
            raise ParameterError(f"unknown scheme {scheme!r}")
        return replace(self, scheme=scheme)

    def canonical(self) -> dict:
        return {
            "N": self.N, "primes": list(self.primes), "aux_primes": list(self.aux_primes),
            "t": self.t, "sigma": repr(float(self.sigma)), "gauss_bound": self.gauss_bound,
            "tau": self.tau, "gadget_base": self.gadget_base, "B_chi": self.B_chi,
            "B_H": self.B_H, "scheme": self.scheme, "ckks_scale": self.ckks_scale,
            "chi": self.chi, "smudging_sigma": repr(float(self.smudging_sigma)),
            "profile": self.profile, "seed": self.seed.hex(),
        }

    def canonical_bytes(self) -> bytes:
        return json.dumps(self.canonical(), sort_keys=True, separators=(",", ":")).encode()

    def digest(self) -> bytes:
        """SHA-256 over the canonical field encoding and the CRS residues."""
        cached = self.__dict__.get("_digest")
        if cached is None:
            h = hashlib.sha256(self.canonical_bytes())
            h.update(self.crs.to_coeff().data.astype("<u8").tobytes())
            cached = h.digest()
            object.__setattr__(self, "_digest", cached)
        return cached

    def __eq__(self, other) -> bool:
        return isinstance(other, Params) and self.digest() == other.digest()

    __hash__ = None


def derive_crs(seed: bytes, ctx: RingContext, tau: int) -> PolyVec:
    """Uniform a in R_Q^tau from SHAKE-256 with per-residue rejection sampling."""
    data = np.empty((tau, ctx.L, ctx.N), dtype=np.uint64)
    base = b"smhe-crs|" + ctx.N.to_bytes(4, "little") + b"|" + seed
    for j in range(tau):
        for i, q in enumerate(ctx.primes):
            mask = (1 << q.bit_length()) - 1
            got = np.empty(0, dtype=np.uint64)
            counter = 0
            while got.size < ctx.N:
                label = base + b"|%d|%d|%d" % (j, q, counter)
                raw = hashlib.shake_256(label).digest(8 * (ctx.N + 64))
                words = np.frombuffer(raw, dtype="<u8") & np.uint64(mask)
                got = np.concatenate([got, words[words < np.uint64(q)]])
                counter += 1
            data[j, i] = got[: ctx.N]
    return PolyVec(ctx, data, Form.COEFF)


def setup(seed: bytes, profile: str = "desk", scheme: str = BFV, **overrides) -> Params:
    """Build deployment parameters from a shipped profile.

    ``overrides`` may replace any of: N, num_primes, prime_bits, t, sigma,
    tau, ckks_scale, chi, smudging_sigma.
    """
    if profile not in PROFILES:
        raise ParameterError(f"unknown profile {profile!r}; choose from {sorted(PROFILES)}")
    if not seed:
        raise ParameterError("seed must be non-empty")
    if isinstance(seed, str):
        seed = seed.encode()
    unknown = set(overrides) - _OVERRIDABLE
    if unknown:
        raise ParameterError(f"unknown parameter override(s): {sorted(unknown)}")
    cfg = dict(PROFILES[profile])
    cfg.update(scheme=scheme, chi="binary", smudging_sigma=None)
    cfg.update(overrides)
    if cfg["scheme"] not in SCHEMES:
        raise ParameterError(f"unknown scheme {cfg['scheme']!r}")
    if cfg["chi"] not in ("binary", "ternary"):
        raise ParameterError(f"unknown key distribution {cfg['chi']!r}")

    N, tau = int(cfg["N"]), int(cfg["tau"])
    sigma = float(cfg["sigma"])
    if sigma < 0:
        raise ParameterError("sigma must be non-negative")
    primes = tuple(find_ntt_primes(N, int(cfg["prime_bits"]), int(cfg["num_primes"])))
    ctx = ring_context(N, primes)
    Q = ctx.Q
    # the exact tensor needs |c_i * c_j| <= N * (Q/2)^2 < Q*P/2
    need = N * Q + 1
    aux: list[int] = []
    P = 1
    pool = iter(find_ntt_primes(N, int(cfg["prime_bits"]), 4 * len(primes) + 8, exclude=primes))
    while P <= need:
        p = next(pool)
        aux.append(p)
        P *= p

    t = int(cfg["t"])
    if t < 2 or t >= Q:
        raise ParameterError("plaintext modulus must satisfy 2 <= t < Q")
    # one spare bit so the balanced tau-digit range strictly covers (-Q/2, Q/2]
    gadget_base = 2 ** math.ceil((Q.bit_length() + 1) / tau)
    smudging = cfg["smudging_sigma"]
    return Params(
        N=N, primes=primes, aux_primes=tuple(aux), t=t, sigma=sigma,
        gauss_bound=math.ceil(6 * sigma), tau=tau, gadget_base=gadget_base, B_chi=1,
        B_H=-(-gadget_base // 2), scheme=cfg["scheme"], ckks_scale=int(cfg["ckks_scale"]),
        chi=cfg["chi"], smudging_sigma=sigma if smudging is None else float(smudging),
        profile=profile, seed=bytes(seed), crs=derive_crs(bytes(seed), ctx, tau),
    )


def params_from_canonical(fields: dict) -> Params:
    """Rebuild Params from :meth:`Params.canonical` output (CRS re-derived)."""
    try:
        primes = tuple(int(p) for p in fields["primes"])
        N, tau = int(fields["N"]), int(fields["tau"])
        seed = bytes.fromhex(fields["seed"])
        ctx = ring_context(N, primes)
        return Params(
            N=N, primes=primes, aux_primes=tuple(int(p) for p in fields["aux_primes"]),
            t=int(fields["t"]), sigma=float(fields["sigma"]),
            gauss_bound=int(fields["gauss_bound"]), tau=tau,
            gadget_base=int(fields["gadget_base"]), B_chi=int(fields["B_chi"]),
            B_H=int(fields["B_H"]), scheme=fields["scheme"],
            ckks_scale=int(fields["ckks_scale"]), chi=fields["chi"],
            smudging_sigma=float(fields["smudging_sigma"]), profile=fields["profile"],
            seed=seed, crs=derive_crs(seed, ctx, tau),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParameterError(f"malformed parameter record: {exc}") from exc

"""Per-party key generation: secret, public and evaluation keys."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from smhe.gadget import scale_by_gadget
from smhe.ring import Params, Poly, PolyVec
from smhe.ring.sampling import sample_chi, sample_gauss_vec, sample_uniform_vec


@dataclass(frozen=True, eq=False)
class SecretKey:
    index: int
    s: Poly

    def __eq__(self, other):
        return isinstance(other, SecretKey) and self.index == other.index and self.s == other.s

    __hash__ = None


@dataclass(frozen=True, eq=False)
class PublicKey:
    index: int
    b: Poly
    a: Poly

    def __eq__(self, other):
        return (isinstance(other, PublicKey) and self.index == other.index
                and self.b == other.b and self.a == other.a)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class EvalKey:
    """Relinearization material (b, d, u, v), each a gadget-length vector."""

    index: int
    b_vec: PolyVec
    d_vec: PolyVec
    u_vec: PolyVec
    v_vec: PolyVec

    def ntt(self) -> "EvalKey":
        cached = self.__dict__.get("_ntt")
        if cached is None:
            cached = EvalKey(self.index, self.b_vec.to_ntt(), self.d_vec.to_ntt(),
                             self.u_vec.to_ntt(), self.v_vec.to_ntt())
            object.__setattr__(self, "_ntt", cached)
        return cached

    def __eq__(self, other):
        return (isinstance(other, EvalKey) and self.index == other.index
                and self.b_vec == other.b_vec and self.d_vec == other.d_vec
                and self.u_vec == other.u_vec and self.v_vec == other.v_vec)

    __hash__ = None


@dataclass(frozen=True)
class KeyPair:
    sk: SecretKey
    pk: PublicKey
    evk: EvalKey

    @property
    def index(self) -> int:
        return self.sk.index

    def __iter__(self):
        return iter((self.sk, self.pk, self.evk))


def keygen(params: Params, rng: np.random.Generator, index: int = 1) -> KeyPair:
    """Generate (sk, pk, evk) for party ``index`` (1-based) against the shared CRS.

    The auxiliary secret gamma only lives inside this call.
    """
    if index < 1:
        raise ValueError("party indices are 1-based")
    tau = params.tau
    a = params.crs
    s = sample_chi(rng, params)
    gamma = sample_chi(rng, params)
    e0, e1, e2 = (sample_gauss_vec(rng, params, tau) for _ in range(3))
    u = sample_uniform_vec(rng, params, tau)

    b_vec = (-a.times_poly(s)).to_coeff() + e0
    d_vec = (-a.times_poly(gamma)).to_coeff() + scale_by_gadget(s, params) + e1
    v_vec = (-u.times_poly(s)).to_coeff() - scale_by_gadget(gamma, params) + e2
    del gamma

    sk = SecretKey(index, s)
    pk = PublicKey(index, b_vec[0], a[0])
    return KeyPair(sk, pk, EvalKey(index, b_vec, d_vec, u, v_vec))

"""Polynomial arithmetic over R_Q = Z_Q[x]/(x^N + 1) in RNS form."""

from smhe.ring.modarith import RingContext, find_ntt_primes, is_prime, ring_context
from smhe.ring.params import BFV, CKKS, PROFILES, Params, derive_crs, setup
from smhe.ring.poly import Form, Poly, PolyVec, add, intt, mul, negate, ntt, sub
from smhe.ring.sampling import (
    sample_chi,
    sample_gauss,
    sample_gauss_vec,
    sample_uniform,
    sample_uniform_vec,
)

__all__ = [
    "BFV", "CKKS", "PROFILES", "Form", "Params", "Poly", "PolyVec", "RingContext",
    "add", "derive_crs", "find_ntt_primes", "intt", "is_prime", "mul", "negate", "ntt",
    "ring_context", "sample_chi", "sample_gauss", "sample_gauss_vec", "sample_uniform",
    "sample_uniform_vec", "setup", "sub",
]

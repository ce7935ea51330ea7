"""Balanced base-B gadget decomposition, gadget encryption and external product."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from smhe.errors import RingMismatchError
from smhe.ring import Form, Params, Poly, PolyVec
from smhe.ring.sampling import sample_gauss_vec, sample_uniform_vec


def gadget_vector(params: Params) -> PolyVec:
    """g = (1, B, B^2, ..., B^(tau-1)) as constant polynomials."""
    cached = params.__dict__.get("_gadget")
    if cached is None:
        ctx = params.ctx
        data = np.zeros((params.tau, ctx.L, ctx.N), dtype=np.uint64)
        for j in range(params.tau):
            gj = pow(params.gadget_base, j, params.Q)
            for i, p in enumerate(ctx.primes):
                data[j, i, 0] = gj % p
        cached = PolyVec(ctx, data, Form.COEFF)
        object.__setattr__(params, "_gadget", cached)
    return cached


def scale_by_gadget(p: Poly, params: Params) -> PolyVec:
    """p * g, computed as one broadcast multiply by the residues of each B^j."""
    consts = gadget_vector(params).data[:, :, :1]
    return PolyVec(params.ctx, params.ctx.pointwise(p.to_coeff().residues[None], consts))


def decompose_ints(b: Poly, params: Params) -> np.ndarray:
    """Balanced digits of the centered lift of ``b``: int64 array (tau, N), |d| <= B/2."""
    B, tau = params.gadget_base, params.tau
    bits = B.bit_length() - 1
    shift = B // 2 - 1
    # digits in [1 - B/2, B/2] are plain base-B digits of x + shift * (1 + B + ... + B^(tau-1))
    offset = shift * ((B**tau - 1) // (B - 1))
    y = b.to_ints() + offset
    nbytes = -(-bits * tau // 8)
    try:
        raw = b"".join(v.to_bytes(nbytes, "little") for v in y)
    except OverflowError as exc:
        raise ArithmeticError("gadget decomposition left a non-zero carry") from exc
    raw = np.frombuffer(raw, dtype=np.uint8).reshape(params.N, nbytes)
    bitmat = np.unpackbits(raw, axis=1, bitorder="little")
    if bitmat[:, bits * tau:].any():
        raise ArithmeticError("gadget decomposition left a non-zero carry")
    weights = np.left_shift(np.int64(1), np.arange(bits, dtype=np.int64))
    digits = bitmat[:, : bits * tau].reshape(params.N, tau, bits).astype(np.int64) @ weights
    return np.ascontiguousarray(digits.T) - shift


def decompose(b: Poly, params: Params) -> PolyVec:
    """H(b): tau digit polynomials with <H(b), g> = b (mod Q)."""
    if b.form is not Form.COEFF:
        raise RingMismatchError("decompose expects a coefficient-form polynomial")
    return PolyVec(params.ctx, params.ctx.from_ints(decompose_ints(b, params)), Form.COEFF)


def recompose(digits: PolyVec, params: Params) -> Poly:
    if len(digits) != params.tau:
        raise RingMismatchError(f"expected {params.tau} digits, got {len(digits)}")
    ctx = params.ctx
    consts = gadget_vector(params).data[:, :, :1]
    # g_j are constants, so scaling works coefficient-wise in either form
    scaled = ctx.pointwise(digits.data, consts)
    return Poly(ctx, scaled.sum(axis=0, dtype=np.uint64) % ctx.q, digits.form).to_coeff()


@dataclass(frozen=True, eq=False)
class GadgetCiphertext:
    """Gamma = (varsigma0, varsigma1) with <(1, s), Gamma> = mu * g + e."""

    varsigma0: PolyVec
    varsigma1: PolyVec

    def __len__(self) -> int:
        return len(self.varsigma0)

    def __eq__(self, other) -> bool:
        return (isinstance(other, GadgetCiphertext) and self.varsigma0 == other.varsigma0
                and self.varsigma1 == other.varsigma1)

    __hash__ = None

    def ntt(self) -> "GadgetCiphertext":
        cached = self.__dict__.get("_ntt")
        if cached is None:
            cached = GadgetCiphertext(self.varsigma0.to_ntt(), self.varsigma1.to_ntt())
            object.__setattr__(self, "_ntt", cached)
        return cached


def ggt_enc(sk, mu: Poly, rng: np.random.Generator, params: Params) -> GadgetCiphertext:
    """Secret-key gadget encryption: varsigma1 uniform, varsigma0 = -s*varsigma1 + mu*g + e.

    ``sk`` is a :class:`~smhe.keys.SecretKey` or the bare secret polynomial.
    """
    s = getattr(sk, "s", sk)
    v1 = sample_uniform_vec(rng, params, params.tau)
    e = sample_gauss_vec(rng, params, params.tau)
    v0 = (-v1.times_poly(s)).to_coeff() + scale_by_gadget(mu, params) + e
    return GadgetCiphertext(v0, v1)


def decompose_ntt(b: Poly, params: Params) -> PolyVec:
    return decompose(b.to_coeff(), params).to_ntt()


def external_product_digits(digits_ntt: PolyVec, gamma: GadgetCiphertext) -> tuple[Poly, Poly]:
    g = gamma.ntt()
    return digits_ntt.dot(g.varsigma0), digits_ntt.dot(g.varsigma1)


def external_product(b: Poly, gamma: GadgetCiphertext, params: Params) -> tuple[Poly, Poly]:
    """b (.) Gamma = (<H(b), varsigma0>, <H(b), varsigma1>) in coefficient form."""
    c0, c1 = external_product_digits(decompose_ntt(b, params), gamma)
    return c0.to_coeff(), c1.to_coeff()


def external_product_vec(b: Poly, vec: PolyVec, params: Params) -> Poly:
    """b (.) v = <H(b), v> for a single gadget-length vector (evaluation keys)."""
    return decompose_ntt(b, params).dot(vec).to_coeff()

"""Immutable elements of R_Q and R_Q^k in RNS form."""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass

import numpy as np

from smhe.errors import RingMismatchError
from smhe.ring.modarith import RingContext, addmod, mulmod, submod

# Residue range checks after every construction; enabled by the test suite.
DEBUG = bool(os.environ.get("SMHE_DEBUG"))


class Form(enum.Enum):
    COEFF = "coeff"
    NTT = "ntt"


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def _check_range(ctx: RingContext, data: np.ndarray) -> None:
    if data.dtype != np.uint64 or data.shape[-2:] != (ctx.L, ctx.N):
        raise RingMismatchError(f"residue array has shape {data.shape}, dtype {data.dtype}")
    if DEBUG and not (data < ctx.q).all():
        raise AssertionError("residue not reduced below its prime")


@dataclass(frozen=True, eq=False)
class Poly:
    """An element of R_Q as per-prime residues, shape ``(L, N)``."""

    ctx: RingContext
    residues: np.ndarray
    form: Form = Form.COEFF

    def __post_init__(self):
        _check_range(self.ctx, self.residues)
        if self.residues.ndim != 2:
            raise RingMismatchError("Poly residues must be two-dimensional")
        _freeze(self.residues)

    # -- constructors -------------------------------------------------------
    @classmethod
    def zero(cls, ctx: RingContext, form: Form = Form.COEFF) -> "Poly":
        return cls(ctx, np.zeros((ctx.L, ctx.N), dtype=np.uint64), form)

    @classmethod
    def from_ints(cls, ctx: RingContext, values) -> "Poly":
        """Coefficient-form poly from signed integers (shorter input is zero-padded)."""
        v = np.asarray(values)
        if v.ndim != 1 or v.shape[0] > ctx.N:
            raise RingMismatchError(f"expected at most {ctx.N} coefficients")
        if v.shape[0] < ctx.N:
            pad = np.zeros(ctx.N, dtype=object if v.dtype == object else np.int64)
            pad[: v.shape[0]] = v
            v = pad
        return cls(ctx, ctx.from_ints(v))

    @classmethod
    def constant(cls, ctx: RingContext, c: int) -> "Poly":
        res = np.zeros((ctx.L, ctx.N), dtype=np.uint64)
        for i, p in enumerate(ctx.primes):
            res[i, 0] = c % p
        return cls(ctx, res)

    @classmethod
    def monomial(cls, ctx: RingContext, degree: int, c: int = 1) -> "Poly":
        """c * x^degree reduced with x^N = -1."""
        k, d = divmod(degree, ctx.N)
        sign = -1 if k % 2 else 1
        res = np.zeros((ctx.L, ctx.N), dtype=np.uint64)
        for i, p in enumerate(ctx.primes):
            res[i, d] = (sign * c) % p
        return cls(ctx, res)

    # -- representation -----------------------------------------------------
    def to_ntt(self) -> "Poly":
        if self.form is Form.NTT:
            return self
        cached = self.__dict__.get("_ntt")
        if cached is None:
            cached = Poly(self.ctx, self.ctx.ntt(self.residues), Form.NTT)
            object.__setattr__(self, "_ntt", cached)
        return cached

    def to_coeff(self) -> "Poly":
        if self.form is Form.COEFF:
            return self
        cached = self.__dict__.get("_coeff")
        if cached is None:
            cached = Poly(self.ctx, self.ctx.intt(self.residues), Form.COEFF)
            object.__setattr__(self, "_coeff", cached)
        return cached

    def to_ints(self) -> np.ndarray:
        """Centered integer coefficients in (-Q/2, Q/2] as a Python-int object array."""
        return self.ctx.lift_centered(self.to_coeff().residues)

    def inf_norm(self) -> int:
        c = self.to_ints()
        return int(max(abs(int(v)) for v in c)) if len(c) else 0

    def is_zero(self) -> bool:
        return not self.residues.any()

    # -- arithmetic ---------------------------------------------------------
    def _compatible(self, other: "Poly", need_form: bool = True) -> None:
        if not isinstance(other, Poly):
            raise RingMismatchError(f"cannot combine Poly with {type(other).__name__}")
        if not self.ctx.same_ring(other.ctx):
            raise RingMismatchError("operands use different prime lists or ring dimensions")
        if need_form and self.form is not other.form:
            raise RingMismatchError(f"form mismatch: {self.form.value} vs {other.form.value}")

    def __add__(self, other: "Poly") -> "Poly":
        self._compatible(other)
        return Poly(self.ctx, addmod(self.residues, other.residues, self.ctx.q), self.form)

    def __sub__(self, other: "Poly") -> "Poly":
        self._compatible(other)
        return Poly(self.ctx, submod(self.residues, other.residues, self.ctx.q), self.form)

    def __neg__(self) -> "Poly":
        r = self.residues
        return Poly(self.ctx, np.where(r == 0, r, self.ctx.q - r), self.form)

    def __mul__(self, other) -> "Poly":
        if isinstance(other, (int, np.integer)):
            return self.scale(int(other))
        return mul(self, other, out_form=self.form if self.form is other.form else Form.COEFF)

    __rmul__ = __mul__

    def scale(self, c: int) -> "Poly":
        """Multiply by an integer constant (any size)."""
        consts = np.array([c % p for p in self.ctx.primes], dtype=np.uint64).reshape(-1, 1)
        return Poly(self.ctx, mulmod(self.residues, consts, self.ctx.q, self.ctx.qinv), self.form)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Poly) or not self.ctx.same_ring(other.ctx):
            return False
        a, b = self, other
        if a.form is not b.form:
            a, b = a.to_coeff(), b.to_coeff()
        return bool(np.array_equal(a.residues, b.residues))

    __hash__ = None

    def __repr__(self) -> str:
        return f"Poly(N={self.ctx.N}, L={self.ctx.L}, form={self.form.value})"


def add(a: Poly, b: Poly) -> Poly:
    return a + b


def sub(a: Poly, b: Poly) -> Poly:
    return a - b


def negate(a: Poly) -> Poly:
    return -a


def mul(a: Poly, b: Poly, out_form: Form = Form.COEFF) -> Poly:
    """Product in R_Q via forward NTT, pointwise multiply and inverse NTT."""
    a._compatible(b, need_form=False)
    prod = a.ctx.pointwise(a.to_ntt().residues, b.to_ntt().residues)
    out = Poly(a.ctx, prod, Form.NTT)
    return out if out_form is Form.NTT else out.to_coeff()


def ntt(a: Poly) -> Poly:
    if a.form is not Form.COEFF:
        raise RingMismatchError("ntt expects a coefficient-form polynomial")
    return a.to_ntt()


def intt(a: Poly) -> Poly:
    if a.form is not Form.NTT:
        raise RingMismatchError("intt expects an NTT-form polynomial")
    return a.to_coeff()


@dataclass(frozen=True, eq=False)
class PolyVec:
    """A length-k vector over R_Q stored as one ``(k, L, N)`` array."""

    ctx: RingContext
    data: np.ndarray
    form: Form = Form.COEFF

    def __post_init__(self):
        _check_range(self.ctx, self.data)
        if self.data.ndim != 3:
            raise RingMismatchError("PolyVec data must be three-dimensional")
        _freeze(self.data)

    @classmethod
    def from_polys(cls, polys) -> "PolyVec":
        polys = list(polys)
        if not polys:
            raise RingMismatchError("empty PolyVec")
        ctx, form = polys[0].ctx, polys[0].form
        for p in polys[1:]:
            polys[0]._compatible(p)
        return cls(ctx, np.stack([p.residues for p in polys]), form)

    def __len__(self) -> int:
        return self.data.shape[0]

    def __getitem__(self, j: int) -> Poly:
        return Poly(self.ctx, self.data[j].copy(), self.form)

    def __iter__(self):
        return (self[j] for j in range(len(self)))

    def to_ntt(self) -> "PolyVec":
        if self.form is Form.NTT:
            return self
        return PolyVec(self.ctx, self.ctx.ntt(self.data), Form.NTT)

    def to_coeff(self) -> "PolyVec":
        if self.form is Form.COEFF:
            return self
        return PolyVec(self.ctx, self.ctx.intt(self.data), Form.COEFF)

    def _compatible(self, other: "PolyVec") -> None:
        if not self.ctx.same_ring(other.ctx) or self.form is not other.form:
            raise RingMismatchError("PolyVec ring or form mismatch")
        if len(self) != len(other):
            raise RingMismatchError(f"length mismatch: {len(self)} vs {len(other)}")

    def __add__(self, other: "PolyVec") -> "PolyVec":
        self._compatible(other)
        return PolyVec(self.ctx, addmod(self.data, other.data, self.ctx.q), self.form)

    def __sub__(self, other: "PolyVec") -> "PolyVec":
        self._compatible(other)
        return PolyVec(self.ctx, submod(self.data, other.data, self.ctx.q), self.form)

    def __neg__(self) -> "PolyVec":
        d = self.data
        return PolyVec(self.ctx, np.where(d == 0, d, self.ctx.q - d), self.form)

    def times_poly(self, p: Poly) -> "PolyVec":
        """Entrywise product with a single ring element; result in NTT form."""
        if not self.ctx.same_ring(p.ctx):
            raise RingMismatchError("PolyVec/Poly ring mismatch")
        v = self.to_ntt()
        prod = self.ctx.pointwise(v.data, p.to_ntt().residues[None])
        return PolyVec(self.ctx, prod, Form.NTT)

    def dot(self, other: "PolyVec") -> Poly:
        """Inner product over R_Q; result in NTT form."""
        a, b = self.to_ntt(), other.to_ntt()
        a._compatible(b)
        prod = self.ctx.pointwise(a.data, b.data)
        # each term < q < 2**50, so a sum of up to 2**13 terms cannot wrap
        acc = prod.sum(axis=0, dtype=np.uint64) % self.ctx.q
        return Poly(self.ctx, acc, Form.NTT)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolyVec) or len(self) != len(other):
            return False
        a, b = self.to_coeff(), other.to_coeff()
        return a.ctx.same_ring(b.ctx) and bool(np.array_equal(a.data, b.data))

    __hash__ = None

    def __repr__(self) -> str:
        return f"PolyVec(len={len(self)}, N={self.ctx.N}, form={self.form.value})"

"""Word-sized modular arithmetic, NTT tables and CRT lifting for RNS rings.

Residues are stored as ``uint64`` arrays whose last two axes are
``(num_primes, N)``.  Primes are kept below 2**50 so that a product of two
residues can be reduced with a float64 quotient estimate followed by an exact
wrapping correction in 64-bit integer arithmetic.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from smhe.errors import ParameterError

MAX_PRIME_BITS = 50

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin for n < 3.3e24."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def find_ntt_primes(N: int, bits: int, count: int, exclude=()) -> list[int]:
    """Largest ``count`` primes q < 2**bits with q = 1 (mod 2N), skipping ``exclude``."""
    if bits > MAX_PRIME_BITS:
        raise ParameterError(f"primes above {MAX_PRIME_BITS} bits are not supported")
    step = 2 * N
    c = ((1 << bits) - 1) // step * step + 1
    if c >= 1 << bits:
        c -= step
    floor = 1 << (bits - 1)
    found: list[int] = []
    excluded = set(exclude)
    while len(found) < count:
        if c < floor:
            raise ParameterError(
                f"cannot find {count} primes = 1 mod {step} with {bits} bits"
            )
        if c not in excluded and is_prime(c):
            found.append(c)
        c -= step
    return found


def _bit_reverse(k: int, bits: int) -> int:
    r = 0
    for _ in range(bits):
        r = (r << 1) | (k & 1)
        k >>= 1
    return r


def _primitive_2n_root(q: int, N: int) -> int:
    exponent = (q - 1) // (2 * N)
    for g in range(2, q):
        psi = pow(g, exponent, q)
        if pow(psi, N, q) == q - 1:
            return psi
    raise ParameterError(f"no primitive {2 * N}-th root of unity mod {q}")


def mulmod(a: np.ndarray, b: np.ndarray, q: np.ndarray, qinv: np.ndarray) -> np.ndarray:
    """``a * b mod q`` elementwise for residues below 2**50.

    ``q`` (uint64) and ``qinv`` (float64, 1/q) must broadcast against the
    operands.  The float quotient is off by at most one, so a single
    conditional correction in each direction gives the exact remainder.
    """
    quot = np.floor(a.astype(np.float64) * b.astype(np.float64) * qinv).astype(np.uint64)
    r = (a * b - quot * q).view(np.int64)
    qs = q.view(np.int64)
    r = np.where(r < 0, r + qs, r)
    r = np.where(r >= qs, r - qs, r)
    return r.view(np.uint64)


def addmod(a, b, q):
    s = a + b
    return np.where(s >= q, s - q, s)


def submod(a, b, q):
    return np.where(a >= b, a - b, a + q - b)


@dataclass(frozen=True, eq=False)
class RingContext:
    """Precomputed constants for Z_Q[x]/(x^N + 1) with Q = prod(primes)."""

    N: int
    primes: tuple[int, ...]
    q: np.ndarray = field(init=False, repr=False)
    qinv: np.ndarray = field(init=False, repr=False)
    Q: int = field(init=False, repr=False)

    def __post_init__(self):
        N = self.N
        if N < 2 or N & (N - 1):
            raise ParameterError(f"ring dimension {N} is not a power of two")
        for p in self.primes:
            if (p - 1) % (2 * N) or p >= 1 << MAX_PRIME_BITS or not is_prime(p):
                raise ParameterError(f"{p} is not an NTT-friendly prime for N={N}")
        if len(set(self.primes)) != len(self.primes):
            raise ParameterError("duplicate primes in modulus chain")
        logn = N.bit_length() - 1
        L = len(self.primes)
        q = np.array(self.primes, dtype=np.uint64).reshape(L, 1)
        set_ = functools.partial(object.__setattr__, self)
        set_("q", q)
        set_("qinv", 1.0 / q.astype(np.float64))
        Q = 1
        for p in self.primes:
            Q *= p
        set_("Q", Q)

        psi_rev = np.empty((L, N), dtype=np.uint64)
        psi_inv_rev = np.empty((L, N), dtype=np.uint64)
        n_inv = np.empty((L, 1), dtype=np.uint64)
        rev = [_bit_reverse(k, logn) for k in range(N)]
        for i, p in enumerate(self.primes):
            psi = _primitive_2n_root(p, N)
            psi_inv = pow(psi, -1, p)
            pw, pw_inv = [1] * N, [1] * N
            for k in range(1, N):
                pw[k] = pw[k - 1] * psi % p
                pw_inv[k] = pw_inv[k - 1] * psi_inv % p
            psi_rev[i] = [pw[rev[k]] for k in range(N)]
            psi_inv_rev[i] = [pw_inv[rev[k]] for k in range(N)]
            n_inv[i, 0] = pow(N, -1, p)
        set_("_psi_rev", psi_rev)
        set_("_psi_inv_rev", psi_inv_rev)
        set_("_n_inv", n_inv)

        # CRT: x = sum_i [r_i * (Q/q_i)^-1]_{q_i} * (Q/q_i)  (mod Q)
        hats = [Q // p for p in self.primes]
        set_("_crt_hat", hats)
        set_("_crt_hat_inv", np.array(
            [pow(h % p, -1, p) for h, p in zip(hats, self.primes)], dtype=np.uint64
        ).reshape(L, 1))

    @property
    def L(self) -> int:
        return len(self.primes)

    def same_ring(self, other: "RingContext") -> bool:
        return self is other or (self.N == other.N and self.primes == other.primes)

    # -- transforms ---------------------------------------------------------
    def ntt(self, x: np.ndarray) -> np.ndarray:
        """Negacyclic forward NTT along the last axis (bit-reversed output)."""
        N = self.N
        q, qinv = self.q, self.qinv
        a = np.array(x, dtype=np.uint64, copy=True)
        lead = a.shape[:-2]
        L = self.L
        m, t = 1, N
        while m < N:
            t //= 2
            blk = a.reshape(*lead, L, m, 2, t)
            S = self._psi_rev[:, m:2 * m, None]
            U = blk[..., 0, :]
            V = mulmod(blk[..., 1, :], S, q[..., None], qinv[..., None])
            top = addmod(U, V, q[..., None])
            bot = submod(U, V, q[..., None])
            blk[..., 0, :] = top
            blk[..., 1, :] = bot
            m *= 2
        return a

    def intt(self, x: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`ntt`."""
        N = self.N
        q, qinv = self.q, self.qinv
        a = np.array(x, dtype=np.uint64, copy=True)
        lead = a.shape[:-2]
        L = self.L
        m, t = N, 1
        while m > 1:
            h = m // 2
            blk = a.reshape(*lead, L, h, 2, t)
            S = self._psi_inv_rev[:, h:m, None]
            U = blk[..., 0, :].copy()
            V = blk[..., 1, :]
            blk[..., 0, :] = addmod(U, V, q[..., None])
            blk[..., 1, :] = mulmod(submod(U, V, q[..., None]), S, q[..., None], qinv[..., None])
            t *= 2
            m = h
        return mulmod(a, self._n_inv, q, qinv)

    def pointwise(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return mulmod(a, b, self.q, self.qinv)

    # -- integer conversions ------------------------------------------------
    def from_ints(self, values) -> np.ndarray:
        """Reduce integers (int64 array or Python-int object array) into residues."""
        v = np.asarray(values)
        if v.dtype == object:
            out = np.empty(v.shape[:-1] + (self.L, self.N), dtype=np.uint64)
            for i, p in enumerate(self.primes):
                out[..., i, :] = (v % p).astype(np.uint64)
            return out
        v = v.astype(np.int64)
        return np.mod(v[..., None, :], self.q.astype(np.int64)).astype(np.uint64)

    def lift(self, residues: np.ndarray) -> np.ndarray:
        """CRT-reconstruct residues into Python ints in [0, Q) (object array)."""
        y = mulmod(residues, self._crt_hat_inv, self.q, self.qinv)
        acc = None
        for i, h in enumerate(self._crt_hat):
            term = y[..., i, :].astype(object) * h
            acc = term if acc is None else acc + term
        return acc % self.Q

    def lift_centered(self, residues: np.ndarray) -> np.ndarray:
        """CRT-reconstruct into representatives in (-Q/2, Q/2]."""
        x = self.lift(residues)
        half = self.Q // 2
        return np.where(x > half, x - self.Q, x)


@functools.lru_cache(maxsize=None)
def ring_context(N: int, primes: tuple[int, ...]) -> RingContext:
    return RingContext(N, tuple(primes))

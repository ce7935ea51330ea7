"""Masking scheme: UniEnc, MaskEnc, Extend and Extend*.

For independent keys (sk, pk) and (sk', pk') and ``(cz, gamma) =
mask_enc(pk, sk)``, the correction ``cx = extend(gamma, pk, pk')`` satisfies
``<sk, cx> + <sk', cz> ~ 0``: a one-time pad that only cancels when both
parties' keys take part in decryption.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from smhe import noise
from smhe.encoding import scaled_plaintext
from smhe.errors import KeyMismatchError, MissingMaterialError
from smhe.gadget import GadgetCiphertext, external_product, ggt_enc
from smhe.keys import PublicKey, SecretKey
from smhe.ring import BFV, Params, Poly
from smhe.ring.sampling import sample_chi, sample_gauss


@dataclass(frozen=True, eq=False)
class FreshCiphertext:
    """Single-key ciphertext (c0, c1) under party ``owner``'s public key."""

    c0: Poly
    c1: Poly
    owner: int
    scheme: str
    scale: int = 1
    noise_bound: int = 0
    msg_bound: int = 0

    def __eq__(self, other):
        return (isinstance(other, FreshCiphertext) and self.owner == other.owner
                and self.scheme == other.scheme and self.scale == other.scale
                and self.c0 == other.c0 and self.c1 == other.c1)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class MaskMaterial:
    """(cz, gamma): an encryption of zero with randomness r and a gadget encryption of r."""

    cz0: Poly
    cz1: Poly
    gamma: GadgetCiphertext
    owner: int

    @property
    def cz(self) -> tuple[Poly, Poly]:
        return self.cz0, self.cz1

    def __eq__(self, other):
        return (isinstance(other, MaskMaterial) and self.owner == other.owner
                and self.cz0 == other.cz0 and self.cz1 == other.cz1
                and self.gamma == other.gamma)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class MaskCorrection:
    x0: Poly
    x1: Poly

    def __iter__(self):
        return iter((self.x0, self.x1))


def _rlwe_encrypt(pk: PublicKey, m0: Poly, rnd: Poly, rng, params: Params) -> tuple[Poly, Poly]:
    e0 = sample_gauss(rng, params)
    e1 = sample_gauss(rng, params)
    c0 = (rnd * pk.b) + m0 + e0
    c1 = (rnd * pk.a) + e1
    return c0, c1


def uni_enc(mu, pk: PublicKey, params: Params, rng: np.random.Generator) -> FreshCiphertext:
    """ct = w*pk + (mu~ + e0, e1) with w from chi.

    BFV: ``mu`` holds coefficients in [0, t) and mu~ = round(Q/t * mu).
    CKKS: ``mu`` holds integers already multiplied by the scale.
    """
    scaled = scaled_plaintext(mu, params)
    m0 = Poly.from_ints(params.ctx, scaled % params.Q)
    w = sample_chi(rng, params)
    c0, c1 = _rlwe_encrypt(pk, m0, w, rng, params)
    if params.scheme == BFV:
        return FreshCiphertext(c0, c1, pk.index, BFV, 1, noise.fresh(params), 0)
    msg = max((abs(int(x)) for x in scaled), default=0)
    return FreshCiphertext(c0, c1, pk.index, params.scheme, params.ckks_scale,
                           noise.fresh(params), msg)


def mask_enc(pk: PublicKey, sk: SecretKey, params: Params, rng: np.random.Generator,
             r: Poly | None = None) -> MaskMaterial:
    """cz = r*pk + (e0, e1) and gamma = GgtEnc(sk, r) for a fresh r from chi.

    ``r`` may be supplied for noise experiments; by default it is sampled
    here and never leaves the call.
    """
    if pk.index != sk.index:
        raise KeyMismatchError("mask_enc needs the caller's own key pair")
    if r is None:
        r = sample_chi(rng, params)
    cz0, cz1 = _rlwe_encrypt(pk, Poly.zero(params.ctx), r, rng, params)
    gamma = ggt_enc(sk, r, rng, params)
    return MaskMaterial(cz0, cz1, gamma, pk.index)


def _check_crs(pk: PublicKey, other: PublicKey) -> None:
    if not pk.a == other.a:
        raise KeyMismatchError(f"public keys {pk.index} and {other.index} use different CRS")


def extend(gamma: GadgetCiphertext, pk: PublicKey, pk_prime: PublicKey,
           params: Params) -> MaskCorrection:
    """cx = (b' - b) (.) gamma, so <sk, cx> ~ r (b' - b)."""
    _check_crs(pk, pk_prime)
    x0, x1 = external_product(pk_prime.b - pk.b, gamma, params)
    return MaskCorrection(x0, x1)


def extend_star(gamma: GadgetCiphertext, pk: PublicKey, other_pks,
                params: Params) -> MaskCorrection:
    """cx = (sum_j (b_j - b)) (.) gamma: one decomposition for all other keys."""
    others = list(other_pks)
    if not others:
        raise MissingMaterialError("extend_star needs at least one other public key")
    total = Poly.zero(params.ctx)
    for o in others:
        _check_crs(pk, o)
        total = total + o.b
    total = total - pk.b.scale(len(others))
    x0, x1 = external_product(total, gamma, params)
    return MaskCorrection(x0, x1)

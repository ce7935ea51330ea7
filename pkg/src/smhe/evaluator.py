"""Multi-key ciphertext lifecycle for both the masked scheme and the CDKS baseline.

Expanded ciphertexts carry n+1 components for a deployment of n parties and
decrypt under the concatenated key (1, s_1, ..., s_n).  The masked addition
injects pads built from per-ciphertext mask material; the CDKS functions at
the bottom skip that step and are kept as the insecure reference whose
partial decryptions leak each client's plaintext.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, replace

import numpy as np

from smhe import noise
from smhe.encoding import decode
from smhe.errors import (
    KeyMismatchError,
    MissingMaterialError,
    NoiseBudgetExceeded,
    RingMismatchError,
)
from smhe.gadget import decompose_ntt
from smhe.keys import EvalKey, KeyPair, PublicKey, SecretKey
from smhe.masking import (
    FreshCiphertext,
    MaskMaterial,
    extend,
    extend_star,
    mask_enc,
    uni_enc,
)
from smhe.ring import BFV, Form, Params, Poly
from smhe.ring.sampling import sample_gauss


@dataclass(frozen=True, eq=False)
class ExpandedCiphertext:
    components: tuple[Poly, ...]
    ref_set: tuple[int, ...]
    masked: bool
    scheme: str
    scale: int = 1
    noise_bound: int = 0
    msg_bound: int = 0

    @property
    def n(self) -> int:
        return len(self.components) - 1

    def __len__(self) -> int:
        return len(self.components)

    def __getitem__(self, i: int) -> Poly:
        return self.components[i]

    def __eq__(self, other):
        return (isinstance(other, ExpandedCiphertext) and self.ref_set == other.ref_set
                and self.masked == other.masked and self.scheme == other.scheme
                and self.scale == other.scale and len(self) == len(other)
                and all(a == b for a, b in zip(self.components, other.components)))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class CiphertextBundle:
    ct: FreshCiphertext
    mask: MaskMaterial

    @property
    def owner(self) -> int:
        return self.ct.owner


@dataclass(frozen=True, eq=False)
class PartialDecryption:
    nu: Poly
    party: int

    def __eq__(self, other):
        return isinstance(other, PartialDecryption) and self.party == other.party and self.nu == other.nu

    __hash__ = None


def _check_budget(ct: ExpandedCiphertext, params: Params) -> ExpandedCiphertext:
    cap = noise.capacity(params, ct.msg_bound)
    if ct.noise_bound > cap:
        raise NoiseBudgetExceeded(
            f"noise bound 2^{ct.noise_bound.bit_length()} exceeds decryption capacity "
            f"2^{max(cap, 1).bit_length()}"
        )
    return ct


def _by_index(items, kind: str) -> dict[int, object]:
    if isinstance(items, Mapping):
        return dict(items)
    out: dict[int, object] = {}
    for it in items:
        idx = getattr(it, "index", None)
        if idx is None:
            idx = getattr(it, "owner", None)
        if idx in out:
            raise KeyMismatchError(f"duplicate {kind} for party {idx}")
        out[idx] = it
    return out


# -- encryption and expansion -------------------------------------------------

def encrypt(mu, party_keys: KeyPair, params: Params, rng: np.random.Generator) -> CiphertextBundle:
    """Fresh ciphertext plus mask material bound to it (same pk, one call)."""
    ct = uni_enc(mu, party_keys.pk, params, rng)
    mask = mask_enc(party_keys.pk, party_keys.sk, params, rng)
    return CiphertextBundle(ct, mask)


def expand(ct, i: int, n: int) -> ExpandedCiphertext:
    """Place (c0, c1) at slots 0 and i of an (n+1)-component ciphertext."""
    if isinstance(ct, CiphertextBundle):
        ct = ct.ct
    if not 1 <= i <= n:
        raise IndexError(f"party index {i} outside [1, {n}]")
    if ct.owner != i:
        raise KeyMismatchError(f"ciphertext of party {ct.owner} expanded at slot {i}")
    zero = Poly.zero(ct.c0.ctx)
    comps = [zero] * (n + 1)
    comps[0], comps[i] = ct.c0, ct.c1
    return ExpandedCiphertext(tuple(comps), (i,), False, ct.scheme, ct.scale,
                              ct.noise_bound, ct.msg_bound)


def zero_ciphertext(params: Params, n: int, scale: int | None = None) -> ExpandedCiphertext:
    """The all-zero (n+1)-component ciphertext with an empty reference set."""
    z = Poly.zero(params.ctx)
    if scale is None:
        scale = 1 if params.scheme == BFV else params.ckks_scale
    return ExpandedCiphertext((z,) * (n + 1), (), False, params.scheme, scale, 0, 0)


def _check_pair(e1: ExpandedCiphertext, e2: ExpandedCiphertext) -> None:
    if e1.n != e2.n:
        raise RingMismatchError(f"party count mismatch: {e1.n} vs {e2.n}")
    if e1.scheme != e2.scheme:
        raise RingMismatchError("cannot combine BFV and CKKS ciphertexts")


def _check_add_scale(e1: ExpandedCiphertext, e2: ExpandedCiphertext) -> None:
    if e1.scale != e2.scale:
        raise RingMismatchError(f"scale mismatch: {e1.scale} vs {e2.scale}")


def _sum_bounds(e1, e2, params) -> tuple[int, int]:
    rounding = 1 if params.scheme == BFV else 0
    return e1.noise_bound + e2.noise_bound + rounding, e1.msg_bound + e2.msg_bound


# -- masked addition ----------------------------------------------------------

def add_two(e1: ExpandedCiphertext, e2: ExpandedCiphertext, pk1: PublicKey, pk2: PublicKey,
            mask1: MaskMaterial, mask2: MaskMaterial, params: Params) -> ExpandedCiphertext:
    """Two-party masked addition.

    Output: (c0^1 + c0^2 + x0^1 + x0^2 + z0^1 + z0^2, c1^1 + x1^1 + z1^2, c1^2 + x1^2 + z1^1)
    with cx_1 = Extend(Gamma_1, pk_1, pk_2) and cx_2 = Extend(Gamma_2, pk_2, pk_1).
    """
    _check_pair(e1, e2)
    _check_add_scale(e1, e2)
    if e1.n != 2 or e1.ref_set != (1,) or e2.ref_set != (2,):
        raise RingMismatchError("add_two expects expansions of party 1 and party 2 with n=2")
    if (pk1.index, pk2.index, mask1.owner, mask2.owner) != (1, 2, 1, 2):
        raise KeyMismatchError("keys or masks do not belong to parties 1 and 2")
    x0_1, x1_1 = extend(mask1.gamma, pk1, pk2, params)
    x0_2, x1_2 = extend(mask2.gamma, pk2, pk1, params)
    c0 = e1[0] + e2[0] + x0_1 + x0_2 + mask1.cz0 + mask2.cz0
    c1 = e1[1] + x1_1 + mask2.cz1
    c2 = e2[2] + x1_2 + mask1.cz1
    nb, mb = _sum_bounds(e1, e2, params)
    nb += 2 * (noise.extend(params) + noise.cz_cross(params))
    out = ExpandedCiphertext((c0, c1, c2), (1, 2), True, e1.scheme, e1.scale, nb, mb)
    return _check_budget(out, params)


def add(e1: ExpandedCiphertext, e2: ExpandedCiphertext, ref_keys, masks, params: Params,
        ref: Sequence[int] | None = None, ref_prime: Sequence[int] | None = None
        ) -> ExpandedCiphertext:
    """General masked addition over reference sets T (of e1) and T' (of e2).

    For every i in T the pad Extend*(Gamma_i, pk_i, {pk_j : j in T' - i}) and
    the sum of cz_j over the same j are added to slots (0, i); symmetrically
    for i in T'.  ``ref``/``ref_prime`` override the ciphertexts' own
    reference sets, which is how the ring-ordered aggregation pairs each
    client with its neighbours.
    """
    _check_pair(e1, e2)
    _check_add_scale(e1, e2)
    T = tuple(sorted(set(e1.ref_set if ref is None else ref)))
    Tp = tuple(sorted(set(e2.ref_set if ref_prime is None else ref_prime)))
    n = e1.n
    for i in T + Tp:
        if not 1 <= i <= n:
            raise IndexError(f"reference index {i} outside [1, {n}]")
    pks = _by_index(ref_keys, "public key")
    mks = _by_index(masks, "mask")

    comps = [e1[0] + e2[0]] + [e1[i] + e2[i] for i in range(1, n + 1)]
    nb, mb = _sum_bounds(e1, e2, params)
    acc0 = None
    for i in range(1, n + 1):
        contributions = []
        for mine, theirs in ((T, Tp), (Tp, T)):
            if i not in mine:
                continue
            partners = [j for j in theirs if j != i]
            if not partners:
                continue
            missing = [k for k in [i, *partners] if k not in pks or k not in mks]
            if missing:
                raise MissingMaterialError(f"no key/mask material for parties {missing}")
            if mks[i].owner != i or pks[i].index != i:
                raise KeyMismatchError(f"material for slot {i} belongs to another party")
            cx = extend_star(mks[i].gamma, pks[i], [pks[j] for j in partners], params)
            contributions.append(cx)
            for j in partners:
                contributions.append(mks[j].cz)
            nb += noise.extend(params) + len(partners) * noise.cz_cross(params)
        for x0, x1 in contributions:
            acc0 = x0 if acc0 is None else acc0 + x0
            comps[i] = comps[i] + x1
    if acc0 is not None:
        comps[0] = comps[0] + acc0
    masked = e1.masked or e2.masked or acc0 is not None
    support = set(T) | set(Tp) | set(e1.ref_set) | set(e2.ref_set)
    out = ExpandedCiphertext(tuple(comps), tuple(sorted(support)), masked,
                             e1.scheme, e1.scale, nb, mb)
    return _check_budget(out, params)


# -- multiplication -----------------------------------------------------------

def _tensor(e1: ExpandedCiphertext, e2: ExpandedCiphertext, params: Params):
    """All products c_i * c'_j; BFV entries are round(t/Q * c_i c'_j) over the integers."""
    n = e1.n
    ctx = params.ctx
    nz1 = [not c.is_zero() for c in e1.components]
    nz2 = [not c.is_zero() for c in e2.components]
    T: dict[tuple[int, int], Poly] = {}
    if params.scheme != BFV:
        for i in range(n + 1):
            for j in range(n + 1):
                if nz1[i] and nz2[j]:
                    T[i, j] = (e1[i].to_ntt() * e2[j].to_ntt()).to_coeff()
        return T
    big = params.aux_ctx
    Q, t = params.Q, params.t

    def to_big(c: Poly) -> np.ndarray:
        return big.ntt(big.from_ints(c.to_ints()))

    a = [to_big(c) if nz else None for c, nz in zip(e1.components, nz1)]
    b = [to_big(c) if nz else None for c, nz in zip(e2.components, nz2)]
    for i in range(n + 1):
        for j in range(n + 1):
            if a[i] is None or b[j] is None:
                continue
            x = big.lift_centered(big.intt(big.pointwise(a[i], b[j])))
            y = (x * t + Q // 2) // Q
            T[i, j] = Poly(ctx, ctx.from_ints(y % Q))
    return T


def _evk_map(evks, n: int) -> dict[int, EvalKey]:
    if isinstance(evks, Mapping):
        m = dict(evks)
    else:
        evks = list(evks)
        if len(evks) != n:
            raise MissingMaterialError(f"expected {n} evaluation keys, got {len(evks)}")
        m = {}
        for pos, k in enumerate(evks, start=1):
            m[getattr(k, "index", pos)] = k
    if sorted(m) != list(range(1, n + 1)):
        raise MissingMaterialError(f"evaluation keys must cover parties 1..{n}")
    return m


def relinearize(T: Mapping[tuple[int, int], Poly], n: int, evks: Mapping[int, EvalKey],
                params: Params) -> tuple[list[Poly], int]:
    """Collapse the (n+1)^2 tensor back to n+1 components.

    For each i, j >= 1 with c = c_i c'_j:
        cbar_j += c (.) d_i
        c'     =  c (.) b_j
        (cbar_0, cbar_i) += c' (.) (v_i, u_i)
    """
    ctx = params.ctx
    zero = Poly.zero(ctx)
    coeff = [T.get((0, 0), zero)]
    for i in range(1, n + 1):
        coeff.append(T.get((0, i), zero) + T.get((i, 0), zero))
    acc = [Poly.zero(ctx, Form.NTT) for _ in range(n + 1)]
    pairs = 0
    for i in range(1, n + 1):
        ki = evks[i].ntt()
        for j in range(1, n + 1):
            c = T.get((i, j))
            if c is None or c.is_zero():
                continue
            pairs += 1
            kj = evks[j].ntt()
            digits = decompose_ntt(c, params)
            acc[j] = acc[j] + digits.dot(ki.d_vec)
            c_prime = digits.dot(kj.b_vec)
            digits2 = decompose_ntt(c_prime, params)
            acc[0] = acc[0] + digits2.dot(ki.v_vec)
            acc[i] = acc[i] + digits2.dot(ki.u_vec)
    return [c + a.to_coeff() for c, a in zip(coeff, acc)], pairs


def mult(e1: ExpandedCiphertext, e2: ExpandedCiphertext, evks, params: Params) -> ExpandedCiphertext:
    """Tensor product followed by relinearization with every party's evaluation key."""
    _check_pair(e1, e2)
    n = e1.n
    keymap = _evk_map(evks, n)
    T = _tensor(e1, e2, params)
    comps, pairs = relinearize(T, n, keymap, params)
    if params.scheme == BFV:
        nb = noise.bfv_tensor(params, n, e1.noise_bound, e2.noise_bound)
        mb, scale = 0, 1
    else:
        nb = noise.ckks_tensor(params, e1.noise_bound, e2.noise_bound, e1.msg_bound, e2.msg_bound)
        mb, scale = params.N * e1.msg_bound * e2.msg_bound, e1.scale * e2.scale
    nb += pairs * noise.relin_pair(params)
    out = ExpandedCiphertext(tuple(comps), tuple(sorted(set(e1.ref_set) | set(e2.ref_set))),
                             e1.masked or e2.masked, e1.scheme, scale, nb, mb)
    return _check_budget(out, params)


# -- decryption ---------------------------------------------------------------

def _support_check(e: ExpandedCiphertext) -> None:
    for i in range(1, e.n + 1):
        if i not in e.ref_set and not e[i].is_zero():
            raise RingMismatchError(f"slot {i} is non-zero but outside the reference set")


def decrypt_phase(e: ExpandedCiphertext, sks) -> Poly:
    """<(1, s_1, ..., s_n), components> restricted to the reference set."""
    _support_check(e)
    keys = _by_index(sks, "secret key")
    missing = [i for i in e.ref_set if i not in keys]
    if missing:
        raise MissingMaterialError(f"missing secret keys for parties {missing}")
    phase_ntt = Poly.zero(e[0].ctx, Form.NTT)
    for i in e.ref_set:
        phase_ntt = phase_ntt + e[i].to_ntt() * keys[i].s.to_ntt()
    return e[0] + phase_ntt.to_coeff()


def decrypt(e: ExpandedCiphertext, sks, params: Params):
    """Joint decryption: BFV returns ints mod t, CKKS returns floats divided by the scale."""
    return decode(decrypt_phase(e, sks), params, e.scale)


def part_dec(e: ExpandedCiphertext, i: int, sk_i: SecretKey, rng: np.random.Generator,
             params: Params) -> PartialDecryption:
    """nu_i = cbar_i * s_i + e_i with smudging noise e_i."""
    if sk_i.index != i:
        raise KeyMismatchError(f"secret key of party {sk_i.index} used for slot {i}")
    if not 1 <= i <= e.n:
        raise IndexError(f"party index {i} outside [1, {e.n}]")
    err = sample_gauss(rng, params, params.smudging_sigma)
    return PartialDecryption(e[i] * sk_i.s + err, i)


def merge_phase(e: ExpandedCiphertext, parts) -> Poly:
    _support_check(e)
    seen: dict[int, PartialDecryption] = {}
    for p in parts:
        if p.party in seen:
            raise KeyMismatchError(f"duplicate partial decryption from party {p.party}")
        seen[p.party] = p
    missing = [i for i in e.ref_set if i not in seen]
    if missing:
        raise MissingMaterialError(f"missing partial decryptions from parties {missing}")
    extra = [i for i in seen if i not in e.ref_set]
    if extra:
        raise KeyMismatchError(f"partial decryptions from parties outside the reference set: {extra}")
    out = e[0]
    for i in sorted(seen):
        out = out + seen[i].nu
    return out


def merge(e: ExpandedCiphertext, parts, params: Params):
    """mu = cbar_0 + sum nu_i, then the scheme decode."""
    return decode(merge_phase(e, parts), params, e.scale)


# -- CDKS baseline ------------------------------------------------------------

def cdks_expand(ct, i: int, n: int) -> ExpandedCiphertext:
    return expand(ct, i, n)


def cdks_add(e1: ExpandedCiphertext, e2: ExpandedCiphertext, params: Params) -> ExpandedCiphertext:
    """Plain componentwise sum: slot i keeps party i's c1 untouched."""
    _check_pair(e1, e2)
    _check_add_scale(e1, e2)
    comps = tuple(a + b for a, b in zip(e1.components, e2.components))
    nb, mb = _sum_bounds(e1, e2, params)
    out = ExpandedCiphertext(comps, tuple(sorted(set(e1.ref_set) | set(e2.ref_set))),
                             e1.masked or e2.masked, e1.scheme, e1.scale, nb, mb)
    return _check_budget(out, params)


cdks_part_dec = part_dec
cdks_merge = merge


def attack_recover(c0_i: Poly, nu_i: PartialDecryption, params: Params, scale: int | None = None):
    """Honest-but-curious observer: decode(c0^i + nu_i).

    Against the CDKS aggregate this is party i's plaintext; against a masked
    aggregate the pads in slot i turn it into noise.
    """
    return decode(c0_i + nu_i.nu, params, scale)


def with_scheme(e: ExpandedCiphertext, **changes) -> ExpandedCiphertext:
    return replace(e, **changes)

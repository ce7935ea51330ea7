"""Deterministic binary encoding of parameters, keys, ciphertexts and shares.

Every blob starts with a 39-byte header:

    magic "SMH1" | version u16 LE | kind u8 | SHA-256 params digest (32 bytes)

Polynomials are written in coefficient form as one u64 LE word per residue,
primes in parameter order, coefficients in index order.  Integers that can
exceed 64 bits (scales and noise bounds) are length-prefixed LE byte strings.
"""

from __future__ import annotations

import enum
import json
import struct

import numpy as np

from smhe.errors import SerializationError
from smhe.evaluator import ExpandedCiphertext, PartialDecryption
from smhe.gadget import GadgetCiphertext
from smhe.keys import EvalKey, PublicKey, SecretKey
from smhe.masking import FreshCiphertext, MaskMaterial
from smhe.ring import BFV, CKKS, Form, Params, Poly, PolyVec
from smhe.ring.params import params_from_canonical

MAGIC = b"SMH1"
VERSION = 1
HEADER = struct.Struct("<4sHB32s")
HEADER_SIZE = HEADER.size

_SCHEME_CODES = {BFV: 0, CKKS: 1}
_SCHEMES = {v: k for k, v in _SCHEME_CODES.items()}


class Kind(enum.IntEnum):
    PARAMS = 0
    SK = 1
    PK = 2
    EVK = 3
    FRESH_CT = 4
    MASK = 5
    EXPANDED_CT = 6
    PARTDEC = 7


_KIND_OF = {
    Params: Kind.PARAMS, SecretKey: Kind.SK, PublicKey: Kind.PK, EvalKey: Kind.EVK,
    FreshCiphertext: Kind.FRESH_CT, MaskMaterial: Kind.MASK,
    ExpandedCiphertext: Kind.EXPANDED_CT, PartialDecryption: Kind.PARTDEC,
}


def int_width(params: Params) -> int:
    """Padded byte width of scale and bound fields."""
    return (params.Q.bit_length() + 7) // 8


def poly_bytes(params: Params) -> int:
    return params.L * params.N * 8


# -- writing ------------------------------------------------------------------

class _Writer:
    def __init__(self, int_width: int = 1):
        self.parts: list[bytes] = []
        # metadata integers are padded to a fixed width so sizes do not drift with their values
        self.int_width = int_width

    def u8(self, v: int):
        self.parts.append(struct.pack("<B", v))

    def u32(self, v: int):
        self.parts.append(struct.pack("<I", v))

    def bigint(self, v: int):
        if v < 0:
            raise SerializationError("negative integers are not encodable")
        raw = v.to_bytes(max(self.int_width, (v.bit_length() + 7) // 8), "little")
        self.parts.append(struct.pack("<H", len(raw)) + raw)

    def poly(self, p: Poly):
        self.parts.append(p.to_coeff().residues.astype("<u8", copy=False).tobytes())

    def vec(self, v: PolyVec):
        self.u32(len(v))
        self.parts.append(v.to_coeff().data.astype("<u8", copy=False).tobytes())

    def raw(self, b: bytes):
        self.u32(len(b))
        self.parts.append(b)

    def getvalue(self) -> bytes:
        return b"".join(self.parts)


def serialize(obj, params: Params | None = None) -> bytes:
    """Encode ``obj`` bound to ``params`` (Params objects bind to themselves)."""
    kind = _KIND_OF.get(type(obj))
    if kind is None:
        raise SerializationError(f"cannot serialize {type(obj).__name__}")
    if kind is Kind.PARAMS:
        params = obj
    if params is None:
        raise SerializationError("params are required to bind the object digest")
    w = _Writer(int_width(params))
    if kind is Kind.PARAMS:
        w.raw(obj.canonical_bytes())
    elif kind is Kind.SK:
        w.u32(obj.index)
        w.poly(obj.s)
    elif kind is Kind.PK:
        w.u32(obj.index)
        w.poly(obj.b)
        w.poly(obj.a)
    elif kind is Kind.EVK:
        w.u32(obj.index)
        for v in (obj.b_vec, obj.d_vec, obj.u_vec, obj.v_vec):
            w.vec(v)
    elif kind is Kind.FRESH_CT:
        w.u32(obj.owner)
        w.u8(_SCHEME_CODES[obj.scheme])
        w.bigint(obj.scale)
        w.bigint(obj.noise_bound)
        w.bigint(obj.msg_bound)
        w.poly(obj.c0)
        w.poly(obj.c1)
    elif kind is Kind.MASK:
        w.u32(obj.owner)
        w.poly(obj.cz0)
        w.poly(obj.cz1)
        w.vec(obj.gamma.varsigma0)
        w.vec(obj.gamma.varsigma1)
    elif kind is Kind.EXPANDED_CT:
        w.u32(obj.n)
        w.u8(_SCHEME_CODES[obj.scheme])
        w.u8(int(obj.masked))
        w.bigint(obj.scale)
        w.bigint(obj.noise_bound)
        w.bigint(obj.msg_bound)
        w.u32(len(obj.ref_set))
        for i in obj.ref_set:
            w.u32(i)
        for c in obj.components:
            w.poly(c)
    elif kind is Kind.PARTDEC:
        w.u32(obj.party)
        w.poly(obj.nu)
    return HEADER.pack(MAGIC, VERSION, int(kind), params.digest()) + w.getvalue()


# -- reading ------------------------------------------------------------------

class _Reader:
    def __init__(self, buf: bytes, pos: int):
        self.buf = memoryview(buf)
        self.pos = pos

    def take(self, n: int) -> memoryview:
        if self.pos + n > len(self.buf):
            raise SerializationError("truncated input")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def bigint(self) -> int:
        n = struct.unpack("<H", self.take(2))[0]
        return int.from_bytes(self.take(n), "little")

    def poly(self, params: Params) -> Poly:
        ctx = params.ctx
        arr = np.frombuffer(self.take(poly_bytes(params)), dtype="<u8").reshape(ctx.L, ctx.N)
        if np.any(arr >= ctx.q):
            raise SerializationError("residue out of range for its prime")
        return Poly(ctx, arr.astype(np.uint64), Form.COEFF)

    def vec(self, params: Params) -> PolyVec:
        k = self.u32()
        if k != params.tau:
            raise SerializationError(f"vector length {k} != tau {params.tau}")
        ctx = params.ctx
        raw = self.take(k * poly_bytes(params))
        arr = np.frombuffer(raw, dtype="<u8").reshape(k, ctx.L, ctx.N)
        if np.any(arr >= ctx.q):
            raise SerializationError("residue out of range for its prime")
        return PolyVec(ctx, arr.astype(np.uint64), Form.COEFF)

    def raw(self) -> bytes:
        return bytes(self.take(self.u32()))

    def scheme(self) -> str:
        code = self.u8()
        if code not in _SCHEMES:
            raise SerializationError(f"unknown scheme code {code}")
        return _SCHEMES[code]

    def done(self):
        if self.pos != len(self.buf):
            raise SerializationError(f"{len(self.buf) - self.pos} trailing bytes")


def read_header(blob: bytes) -> tuple[Kind, bytes]:
    if len(blob) < HEADER_SIZE:
        raise SerializationError("truncated header")
    magic, version, kind, digest = HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise SerializationError("bad magic")
    if version != VERSION:
        raise SerializationError(f"unsupported format version {version}")
    try:
        return Kind(kind), digest
    except ValueError:
        raise SerializationError(f"unknown object kind {kind}") from None


def load_params(blob: bytes) -> Params:
    kind, digest = read_header(blob)
    if kind is not Kind.PARAMS:
        raise SerializationError(f"expected params, found {kind.name.lower()}")
    r = _Reader(blob, HEADER_SIZE)
    try:
        fields = json.loads(r.raw())
    except ValueError as exc:
        raise SerializationError(f"malformed params record: {exc}") from exc
    r.done()
    params = params_from_canonical(fields)
    if params.digest() != digest:
        raise SerializationError("params digest mismatch")
    return params


def deserialize(blob: bytes, params: Params | None = None):
    """Decode any object kind; non-params kinds must match ``params``' digest."""
    kind, digest = read_header(blob)
    if kind is Kind.PARAMS:
        return load_params(blob)
    if params is None:
        raise SerializationError("params are required to load this object")
    if digest != params.digest():
        raise SerializationError("params digest mismatch")
    r = _Reader(blob, HEADER_SIZE)
    if kind is Kind.SK:
        obj = SecretKey(r.u32(), r.poly(params))
    elif kind is Kind.PK:
        idx = r.u32()
        obj = PublicKey(idx, r.poly(params), r.poly(params))
    elif kind is Kind.EVK:
        idx = r.u32()
        obj = EvalKey(idx, *(r.vec(params) for _ in range(4)))
    elif kind is Kind.FRESH_CT:
        owner, scheme = r.u32(), r.scheme()
        scale, nb, mb = r.bigint(), r.bigint(), r.bigint()
        c0, c1 = r.poly(params), r.poly(params)
        obj = FreshCiphertext(c0, c1, owner, scheme, scale, nb, mb)
    elif kind is Kind.MASK:
        owner = r.u32()
        cz0, cz1 = r.poly(params), r.poly(params)
        gamma = GadgetCiphertext(r.vec(params), r.vec(params))
        obj = MaskMaterial(cz0, cz1, gamma, owner)
    elif kind is Kind.EXPANDED_CT:
        n, scheme, masked = r.u32(), r.scheme(), bool(r.u8())
        scale, nb, mb = r.bigint(), r.bigint(), r.bigint()
        ref = tuple(r.u32() for _ in range(r.u32()))
        comps = tuple(r.poly(params) for _ in range(n + 1))
        obj = ExpandedCiphertext(comps, ref, masked, scheme, scale, nb, mb)
    else:
        idx = r.u32()
        obj = PartialDecryption(r.poly(params), idx)
    r.done()
    return obj


def wire_size(obj, params: Params) -> int:
    return len(serialize(obj, params))

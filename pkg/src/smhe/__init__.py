"""Masked multi-key homomorphic encryption (BFV and CKKS) with a federated-aggregation simulator."""

from smhe.errors import (
    ConfigError,
    KeyMismatchError,
    MissingMaterialError,
    NoiseBudgetExceeded,
    ParameterError,
    PlaintextRangeError,
    RingMismatchError,
    SerializationError,
    SMHEError,
)
from smhe.evaluator import (
    CiphertextBundle,
    ExpandedCiphertext,
    PartialDecryption,
    add,
    add_two,
    attack_recover,
    cdks_add,
    cdks_expand,
    cdks_merge,
    cdks_part_dec,
    decrypt,
    encrypt,
    expand,
    merge,
    mult,
    part_dec,
)
from smhe.keys import EvalKey, KeyPair, PublicKey, SecretKey, keygen
from smhe.masking import FreshCiphertext, MaskMaterial, extend, extend_star, mask_enc, uni_enc
from smhe.ring import BFV, CKKS, Params, setup

__version__ = "0.1.0"

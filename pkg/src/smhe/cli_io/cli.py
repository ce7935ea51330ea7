"""``smhe`` command line: thin wrappers around the library operations.

Every command that writes files writes them atomically.  Failures print a
single JSON object on stderr: exit code 2 for usage errors, 1 for
validation and cryptographic errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from smhe import evaluator as ev
from smhe.cli_io.config import PARAM_KEYS, load_config
from smhe.cli_io.wire import deserialize, load_params, serialize
from smhe.encoding import ckks_encode
from smhe.errors import SerializationError, SMHEError
from smhe.keys import keygen
from smhe.masking import FreshCiphertext, mask_enc, uni_enc
from smhe.ring import BFV, CKKS, PROFILES, Params, setup

EXIT_FAIL = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- helpers ------------------------------------------------------------------

def _seed(text: str) -> bytes:
    try:
        raw = bytes.fromhex(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be hex, got {text!r}") from None
    if not raw:
        raise argparse.ArgumentTypeError("seed must be non-empty")
    return raw


def _rng(seed: bytes, label: str) -> np.random.Generator:
    digest = hashlib.sha256(seed + b"|" + label.encode()).digest()
    return np.random.default_rng(int.from_bytes(digest, "little"))


def write_atomic(path, data: bytes | str) -> None:
    path = Path(path)
    if isinstance(data, str):
        data = data.encode()
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _read(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise SerializationError(f"cannot read {path}: {exc.strerror}") from exc


def _load(path, params: Params, expect=None):
    obj = deserialize(_read(path), params)
    if expect is not None and not isinstance(obj, expect):
        raise SerializationError(f"{path}: expected {expect.__name__}, found {type(obj).__name__}")
    return obj


def _params(args) -> Params:
    p = load_params(_read(args.params))
    if getattr(args, "scheme", None) and args.scheme != p.scheme:
        raise SerializationError(f"params file is {p.scheme}, --scheme asks for {args.scheme}")
    return p


def _message(args, params: Params):
    if args.message is not None:
        text = args.message
    elif args.input is not None:
        text = _read(args.input).decode()
    else:
        raise UsageError("one of --message or --input is required")
    tokens = text.replace(",", " ").split()
    try:
        if params.scheme == BFV:
            return np.array([int(x) for x in tokens], dtype=np.int64)
        return ckks_encode([float(x) for x in tokens], params.ckks_scale)
    except ValueError as exc:
        raise UsageError(f"bad plaintext value: {exc}") from None


def _as_expanded(obj, n: int) -> ev.ExpandedCiphertext:
    if isinstance(obj, FreshCiphertext):
        return ev.expand(obj, obj.owner, n)
    if isinstance(obj, ev.ExpandedCiphertext):
        if obj.n != n:
            raise SerializationError(f"ciphertext has {obj.n} parties, --n is {n}")
        return obj
    raise SerializationError(f"expected a ciphertext, found {type(obj).__name__}")


def _plaintext_json(values, params: Params, count: int | None) -> dict:
    vals = list(values)
    if count is not None:
        vals = vals[:count]
    if params.scheme == BFV:
        return {"scheme": BFV, "plaintext": [int(v) for v in vals]}
    return {"scheme": CKKS, "plaintext": [float(v) for v in vals]}


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)


# -- commands -----------------------------------------------------------------

def cmd_setup(args):
    overrides = {}
    profile, scheme = args.profile, args.scheme or BFV
    if args.config:
        cfg = load_config(args.config)
        profile = cfg.pop("profile", profile)
        scheme = args.scheme or cfg.pop("scheme", scheme)
        cfg.pop("scheme", None)
        cfg.pop("seed", None)
        overrides = {k: v for k, v in cfg.items() if k in PARAM_KEYS}
    for key in ("N", "t"):
        if getattr(args, key) is not None:
            overrides[key] = getattr(args, key)
    params = setup(args.seed, profile, scheme, **overrides)
    write_atomic(args.out, serialize(params))
    print(json.dumps({"params": str(args.out), "digest": params.digest().hex(),
                      "N": params.N, "log2_Q": params.Q.bit_length(), "scheme": params.scheme}))


def cmd_keygen(args):
    params = _params(args)
    sk, pk, evk = keygen(params, _rng(args.seed, f"keygen|{args.index}"), args.index)
    out = {}
    for suffix, obj in (("sk", sk), ("pk", pk), ("evk", evk)):
        path = f"{args.out}.{suffix}"
        write_atomic(path, serialize(obj, params))
        out[suffix] = path
    print(json.dumps(out))


def cmd_encrypt(args):
    params = _params(args)
    pk = _load(args.pk, params)
    mu = _message(args, params)
    rng = _rng(args.seed, f"encrypt|{pk.index}")
    out = {}
    ct = uni_enc(mu, pk, params, rng)
    if args.mode == "smhe":
        if not args.sk:
            raise UsageError("--sk is required in smhe mode (mask generation)")
        sk = _load(args.sk, params)
        write_atomic(f"{args.out}.mask", serialize(mask_enc(pk, sk, params, rng), params))
        out["mask"] = f"{args.out}.mask"
    write_atomic(f"{args.out}.ct", serialize(ct, params))
    out["ct"] = f"{args.out}.ct"
    print(json.dumps(out))


def cmd_add(args):
    params = _params(args)
    cts = [_as_expanded(_load(p, params), args.n) for p in args.cts]
    if len(cts) < 2:
        raise UsageError("add needs at least two ciphertexts")
    if args.mode == "cdks":
        agg = cts[0]
        for c in cts[1:]:
            agg = ev.cdks_add(agg, c, params)
    else:
        pks = [_load(p, params) for p in args.pks or []]
        masks = [_load(p, params) for p in args.masks or []]
        agg = cts[0]
        for c in cts[1:]:
            agg = ev.add(agg, c, pks, masks, params)
    write_atomic(args.out, serialize(agg, params))
    print(json.dumps({"ct": args.out, "ref_set": list(agg.ref_set), "masked": agg.masked}))


def cmd_mult(args):
    params = _params(args)
    a = _as_expanded(_load(args.cts[0], params), args.n)
    b = _as_expanded(_load(args.cts[1], params), args.n)
    evks = [_load(p, params) for p in args.evks]
    out = ev.mult(a, b, evks, params)
    write_atomic(args.out, serialize(out, params))
    print(json.dumps({"ct": args.out, "ref_set": list(out.ref_set)}))


def cmd_partdec(args):
    params = _params(args)
    ct = _load(args.ct, params, ev.ExpandedCiphertext)
    sk = _load(args.sk, params)
    part = ev.part_dec(ct, sk.index, sk, _rng(args.seed, f"partdec|{sk.index}"), params)
    write_atomic(args.out, serialize(part, params))
    print(json.dumps({"partdec": args.out, "party": part.party}))


def cmd_merge(args):
    params = _params(args)
    ct = _load(args.ct, params, ev.ExpandedCiphertext)
    parts = [_load(p, params, ev.PartialDecryption) for p in args.parts]
    mu = ev.merge(ct, parts, params)
    _emit(args, json.dumps(_plaintext_json(mu, params, args.count)) + "\n")


def cmd_attack_demo(args):
    from smhe.ppfl import sim

    cfg = sim.SimConfig(n=args.n, d=args.d, mode=args.mode, seed=args.seed.hex(),
                        param_overrides={"t": 2**40, **({"N": args.N} if args.N else {})})
    world = sim.build_world(cfg)
    report = sim.run_attack_round(world, args.mode, rounds=args.rounds, show=args.show)
    want, got = report.samples[1]
    summary = {
        "name": "attack_summary", "mode": args.mode, "rounds": args.rounds,
        "min_recovery": report.best(), "max_recovery": report.worst(),
        "attack_succeeds": report.best() == 1.0,
        "input_head": want, "recovered_head": got,
    }
    lines = [json.dumps(r, sort_keys=True) for r in report.records()] + [json.dumps(summary, sort_keys=True)]
    _emit(args, "\n".join(lines) + "\n")


def cmd_simulate(args):
    from smhe.ppfl import sim

    values = load_config(args.config) if args.config else {}
    if args.seed is not None:
        values["seed"] = args.seed.hex()
    for key in ("mode", "scheme", "rounds", "n", "d"):
        if getattr(args, key, None) is not None:
            values[key] = getattr(args, key)
    if args.N is not None:
        values["N"] = args.N
    cfg = sim.SimConfig.from_mapping(values)
    world = sim.build_world(cfg)
    if cfg.elimination_rate:
        world.server.benign = sim.survivors(world, cfg.elimination_rate)
    reports = sim.run_rounds(world, cfg.rounds)
    text = sim.to_jsonl(reports, timing=not args.no_timing)
    if args.sweep:
        rows = sim.client_elimination_sweep(world, args.sweep)
        text += "".join(json.dumps({"name": "elimination", **r}, sort_keys=True) + "\n" for r in rows)
    _emit(args, text)
    if args.figures:
        from smhe.plotting import plot_round_phases

        records = [rec for r in reports for rec in r.records(not args.no_timing)]
        plot_round_phases(records, args.figures)


def cmd_bench(args):
    from smhe.cli_io.wire import wire_size

    overrides = {"N": args.N} if args.N else {}
    params = setup(args.seed, args.profile, args.scheme or BFV, **overrides)
    rows = []
    for n in args.parties:
        rng = _rng(args.seed, f"bench|{n}")
        keys = [keygen(params, rng, i) for i in range(1, n + 1)]
        mus = [rng.integers(0, min(params.t, 2**20), params.N) for _ in range(n)]
        t0 = time.perf_counter_ns()
        bundles = [ev.encrypt(mu, k, params, rng) for mu, k in zip(mus, keys)]
        t_enc = (time.perf_counter_ns() - t0) // n
        exp = [ev.expand(b, i + 1, n) for i, b in enumerate(bundles)]
        pks, masks = [k.pk for k in keys], [b.mask for b in bundles]
        t0 = time.perf_counter_ns()
        agg = exp[0]
        for e in exp[1:]:
            agg = ev.add(agg, e, pks, masks, params)
        t_add = time.perf_counter_ns() - t0
        t0 = time.perf_counter_ns()
        parts = [ev.part_dec(agg, k.index, k.sk, rng, params) for k in keys]
        t_pd = (time.perf_counter_ns() - t0) // n
        t0 = time.perf_counter_ns()
        ev.merge(agg, parts, params)
        t_merge = time.perf_counter_ns() - t0
        rows += [
            {"name": "encrypt", "parties": n, "wall_ns": t_enc},
            {"name": "aggregate", "parties": n, "wall_ns": t_add},
            {"name": "part_dec", "parties": n, "wall_ns": t_pd},
            {"name": "merge", "parties": n, "wall_ns": t_merge},
            {"name": "expanded_size", "parties": n, "bytes": wire_size(agg, params)},
        ]
        if args.mult and n <= 4:
            t0 = time.perf_counter_ns()
            ev.mult(agg, exp[0], [k.evk for k in keys], params)
            rows.append({"name": "mult", "parties": n, "wall_ns": time.perf_counter_ns() - t0})
    _emit(args, "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows))
    if args.figures:
        from smhe.plotting import plot_bench

        plot_bench(rows, args.figures)


# -- parser -------------------------------------------------------------------

def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _int_list(text: str) -> list[int]:
    return [_positive_int(x) for x in text.split(",") if x]


def _rate_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="smhe", description="Masked multi-key homomorphic encryption toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, params=True, seed=False, out=True, mode=False, scheme=False):
        if params:
            sp.add_argument("--params", required=True, help="params file written by `setup`")
        if seed:
            sp.add_argument("--seed", type=_seed, required=True, help="hex seed for all randomness")
        if out:
            sp.add_argument("--out", required=out == "required", help="output file")
        if mode:
            sp.add_argument("--mode", choices=("smhe", "cdks"), default="smhe")
        if scheme:
            sp.add_argument("--scheme", choices=(BFV, CKKS))

    sp = sub.add_parser("setup", help="derive deployment parameters and CRS")
    common(sp, params=False, seed=True, out="required", scheme=True)
    sp.add_argument("--profile", choices=sorted(PROFILES), default="desk")
    sp.add_argument("--config", help="key = value file with parameter overrides")
    sp.add_argument("--N", type=_positive_int)
    sp.add_argument("--t", type=_positive_int)
    sp.set_defaults(func=cmd_setup)

    sp = sub.add_parser("keygen", help="generate sk/pk/evk for one party")
    common(sp, seed=True, out="required")
    sp.add_argument("--index", type=_positive_int, required=True)
    sp.set_defaults(func=cmd_keygen)

    sp = sub.add_parser("encrypt", help="encrypt a plaintext (writes OUT.ct and, in smhe mode, OUT.mask)")
    common(sp, seed=True, out="required", mode=True, scheme=True)
    sp.add_argument("--pk", required=True)
    sp.add_argument("--sk", help="own secret key; needed for mask generation")
    sp.add_argument("--message", help="comma separated coefficients")
    sp.add_argument("--input", help="file with whitespace or comma separated coefficients")
    sp.set_defaults(func=cmd_encrypt)

    sp = sub.add_parser("add", help="add ciphertexts (masked in smhe mode)")
    common(sp, out="required", mode=True, scheme=True)
    sp.add_argument("--n", type=_positive_int, required=True, help="deployment party count")
    sp.add_argument("cts", nargs="+")
    sp.add_argument("--pks", nargs="*")
    sp.add_argument("--masks", nargs="*")
    sp.set_defaults(func=cmd_add)

    sp = sub.add_parser("mult", help="multiply two ciphertexts and relinearize")
    common(sp, out="required", scheme=True)
    sp.add_argument("--n", type=_positive_int, required=True)
    sp.add_argument("cts", nargs=2)
    sp.add_argument("--evks", nargs="+", required=True)
    sp.set_defaults(func=cmd_mult)

    sp = sub.add_parser("partdec", help="partial decryption of one party's slot")
    common(sp, seed=True, out="required")
    sp.add_argument("--ct", required=True)
    sp.add_argument("--sk", required=True)
    sp.set_defaults(func=cmd_partdec)

    sp = sub.add_parser("merge", help="combine partial decryptions and decode")
    common(sp)
    sp.add_argument("--ct", required=True)
    sp.add_argument("parts", nargs="+")
    sp.add_argument("--count", type=_positive_int, help="print only the first COUNT coefficients")
    sp.set_defaults(func=cmd_merge)

    sp = sub.add_parser("attack-demo", help="replay the partial-decryption leakage attack")
    common(sp, params=False, seed=True, mode=True)
    sp.add_argument("--n", type=_positive_int, default=2)
    sp.add_argument("--d", type=_positive_int, default=64)
    sp.add_argument("--N", type=_positive_int, help="ring dimension override")
    sp.add_argument("--rounds", type=_positive_int, default=1)
    sp.add_argument("--show", type=int, default=8, help="coefficients echoed in the summary")
    sp.set_defaults(func=cmd_attack_demo)

    sp = sub.add_parser("simulate", help="run federated aggregation rounds; JSONL report")
    common(sp, params=False, mode=True, scheme=True)
    sp.add_argument("--seed", type=_seed)
    sp.add_argument("--config", help="key = value simulation config")
    sp.add_argument("--n", type=_positive_int)
    sp.add_argument("--d", type=_positive_int)
    sp.add_argument("--N", type=_positive_int)
    sp.add_argument("--rounds", type=_positive_int)
    sp.add_argument("--sweep", type=_rate_list, help="comma separated client elimination rates")
    sp.add_argument("--no-timing", action="store_true", help="null wall times for byte-stable output")
    sp.add_argument("--figures", help="directory for phase time/traffic figures")
    sp.set_defaults(func=cmd_simulate, mode=None)

    sp = sub.add_parser("bench", help="time core operations against party count")
    common(sp, params=False, seed=True, scheme=True)
    sp.add_argument("--profile", choices=sorted(PROFILES), default="desk")
    sp.add_argument("--N", type=_positive_int)
    sp.add_argument("--parties", type=_int_list, default=[2, 4, 8])
    sp.add_argument("--mult", action="store_true", help="also time one multiplication (n <= 4)")
    sp.add_argument("--figures", help="directory for size/time figures")
    sp.set_defaults(func=cmd_bench)
    return p


def _fail(code: int, kind: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", str(exc))
    try:
        args.func(args)
    except UsageError as exc:
        return _fail(EXIT_USAGE, "usage", str(exc))
    except (SMHEError, ValueError, IndexError) as exc:
        return _fail(EXIT_FAIL, type(exc).__name__, str(exc))
    except OSError as exc:
        return _fail(EXIT_FAIL, "io", str(exc))
    return 0


if __name__ == "__main__":
    sys.exit(main())

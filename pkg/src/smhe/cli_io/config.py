"""Flat ``key = value`` configuration files.

Blank lines and lines starting with ``#`` are ignored.  Keys are the
parameter overrides accepted by :func:`smhe.ring.setup` plus the simulator
knobs; unknown keys and malformed values raise :class:`ConfigError`.
"""

from __future__ import annotations

from pathlib import Path

from smhe.errors import ConfigError


def _int(v: str) -> int:
    v = v.strip()
    if "**" in v:
        base, exp = v.split("**", 1)
        return int(base) ** int(exp)
    if "^" in v:
        base, exp = v.split("^", 1)
        return int(base) ** int(exp)
    return int(v, 0)


def _float_list(v: str) -> list[float]:
    return [float(x) for x in v.replace(",", " ").split()]


def _int_list(v: str) -> list[int]:
    return [int(x) for x in v.replace(",", " ").split()]


PARAM_KEYS = {
    "profile": str, "scheme": str, "seed": str, "N": _int, "num_primes": _int,
    "prime_bits": _int, "t": _int, "sigma": float, "tau": _int, "ckks_scale": _int,
    "chi": str, "smudging_sigma": float,
}

SIM_KEYS = {
    "n": _int, "m": _int, "d": _int, "f": _int, "eta": float, "rounds": _int,
    "elimination_rate": float, "mode": str, "clamp": float, "weights": _float_list,
    "benign": _int_list, "grad_sigma": float,
}

KEYS = {**PARAM_KEYS, **SIM_KEYS}


def parse_config(text: str) -> dict:
    out: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            out[key] = KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {value!r}") from exc
    return out


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config(text)


def format_config(values: dict) -> str:
    lines = []
    for k in sorted(values):
        v = values[k]
        if isinstance(v, (list, tuple)):
            v = ",".join(str(x) for x in v)
        lines.append(f"{k} = {v}")
    return "\n".join(lines) + "\n"

"""Parsing of family specification strings such as ``powerexp(alpha=0,beta=2)``."""

import re

from .errors import ConfigError

_CALL = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:\((.*)\))?\s*$")


def _number(text):
    text = text.strip()
    low = text.lower()
    if low in ("inf", "+inf", "infinity"):
        return float("inf")
    if low in ("-inf", "-infinity"):
        return float("-inf")
    try:
        return float(text)
    except ValueError:
        return text


def parse_call(text):
    """Split ``name(a, b, key=v, interval=0,1)`` into (name, args, kwargs).

    A bare value following a keyword argument extends that keyword into a
    tuple, so ``interval=0,1`` yields ``kwargs["interval"] == (0.0, 1.0)``.
    """
    m = _CALL.match(text)
    if not m:
        raise ConfigError(f"malformed family spec: {text!r}")
    name, body = m.group(1), m.group(2)
    args, kwargs = [], {}
    last_key = None
    if body is not None and body.strip():
        for piece in body.split(","):
            piece = piece.strip()
            if not piece:
                raise ConfigError(f"empty argument in {text!r}")
            if "=" in piece:
                key, val = piece.split("=", 1)
                key = key.strip()
                kwargs[key] = _number(val)
                last_key = key
            elif last_key is not None:
                prev = kwargs[last_key]
                prev = prev if isinstance(prev, tuple) else (prev,)
                kwargs[last_key] = prev + (_number(piece),)
            else:
                args.append(_number(piece))
    return name.lower(), args, kwargs


def bind(name, args, kwargs, names, defaults=None):
    """Bind positional/keyword args to ``names``; missing ones come from ``defaults``."""
    defaults = dict(defaults or {})
    if len(args) > len(names):
        raise ConfigError(f"{name}: too many arguments")
    out = dict(zip(names, args))
    for key, val in kwargs.items():
        if key not in names:
            raise ConfigError(f"{name}: unknown parameter {key!r}")
        if key in out:
            raise ConfigError(f"{name}: duplicate parameter {key!r}")
        out[key] = val
    for key in names:
        if key not in out:
            if key not in defaults:
                raise ConfigError(f"{name}: missing parameter {key!r}")
            out[key] = defaults[key]
    return out


def fmt(x):
    """Short canonical number formatting used in labels and canonical specs."""
    if isinstance(x, tuple):
        return ",".join(fmt(v) for v in x)
    if isinstance(x, str):
        return x
    return format(float(x), ".12g")

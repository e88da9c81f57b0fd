"""Campaign configuration: a small ``key = value`` file with bracketed sections."""

import configparser
from dataclasses import asdict, dataclass, fields

from . import measure as _measure
from . import nfunc as _nfunc
from .errors import BadParams, ConfigError
from .measure import QuadratureSettings

TRIPLE_KINDS = ("identity", "mf", "explicit")
CORPUS_KINDS = ("default", "strict")
MODES = ("H", "H1")


def _floats(text, key):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"{key}: expected a comma-separated list of numbers") from None


def _float(text, key):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None


def _int(text, key):
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {text!r}") from None


@dataclass(frozen=True)
class CampaignConfig:
    measure: str = "powerexp(alpha=0,beta=2)"
    nfunction: str = "power(2)"
    triple: str = "identity"
    triple_f: str = ""
    triple_c: str = "auto"
    triple_p: str = ""
    triple_q: str = ""
    p: float = 2.0
    corpus: str = "strict"
    theta: tuple = ()
    mode: str = "H"
    a_dilation: float = 1.0
    samples: int = 100_000
    seed: int = 0
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_subdivisions: int = 2000
    output: str = "report"
    sweep_alpha: tuple = (0.0, 0.3, 0.9, 1.0, 1.5)
    sweep_beta: tuple = (0.5, 1.0, 2.0)
    sweep_p: tuple = (1.5, 2.0, 3.0)

    def __post_init__(self):
        if self.triple not in TRIPLE_KINDS:
            raise ConfigError(f"triple must be one of {TRIPLE_KINDS}, got {self.triple!r}")
        if self.corpus not in CORPUS_KINDS:
            raise ConfigError(f"corpus must be one of {CORPUS_KINDS}, got {self.corpus!r}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.triple == "mf" and not self.triple_f:
            raise ConfigError("triple = mf needs triple.f")
        if self.triple == "explicit" and not (self.triple_p and self.triple_q):
            raise ConfigError("triple = explicit needs triple.p and triple.q")
        if self.p <= 1:
            raise ConfigError("p must exceed 1")
        if self.a_dilation <= 0:
            raise ConfigError("a_dilation must be positive")
        if any(t <= 0 for t in self.theta):
            raise ConfigError("theta values must be positive")
        try:
            self.quadrature
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        specs = [(_measure.from_spec, self.measure), (_nfunc.from_spec, self.nfunction)]
        if self.triple == "mf":
            specs.append((_nfunc.from_spec, self.triple_f))
        if self.triple == "explicit":
            specs += [(_nfunc.from_spec, self.triple_p), (_nfunc.from_spec, self.triple_q)]
        for build, text in specs:
            try:
                build(text)
            except BadParams as exc:
                raise ConfigError(f"{text!r}: {exc}") from None

    @property
    def quadrature(self):
        return QuadratureSettings(self.rel_tol, self.abs_tol, self.max_subdivisions)

    def with_overrides(self, **kw):
        data = asdict(self)
        data.update({k: v for k, v in kw.items() if v is not None})
        return CampaignConfig(**data)

    def to_dict(self):
        return asdict(self)


# section -> (config key in file, dataclass field, kind)
_LAYOUT = {
    "campaign": [("measure", "measure", str), ("nfunction", "nfunction", str),
                 ("p", "p", float), ("corpus", "corpus", str), ("theta", "theta", tuple),
                 ("mode", "mode", str), ("a_dilation", "a_dilation", float),
                 ("samples", "samples", int), ("seed", "seed", int)],
    "triple": [("kind", "triple", str), ("f", "triple_f", str), ("c", "triple_c", str),
               ("p", "triple_p", str), ("q", "triple_q", str)],
    "quadrature": [("rel_tol", "rel_tol", float), ("abs_tol", "abs_tol", float),
                   ("max_subdivisions", "max_subdivisions", int)],
    "output": [("path", "output", str)],
    "sweep": [("alpha", "sweep_alpha", tuple), ("beta", "sweep_beta", tuple),
              ("p", "sweep_p", tuple)],
}


def parse(text):
    """Parse configuration text; unknown sections or keys are errors."""
    cp = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#", ";"),
                                   inline_comment_prefixes=("#",), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    values = {}
    for section in cp.sections():
        if section not in _LAYOUT:
            raise ConfigError(f"unknown section [{section}]")
        known = {key: (name, kind) for key, name, kind in _LAYOUT[section]}
        for key, raw in cp.items(section):
            if key not in known:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            name, kind = known[key]
            raw = raw.strip().strip('"')
            label = f"{section}.{key}"
            if kind is float:
                values[name] = _float(raw, label)
            elif kind is int:
                values[name] = _int(raw, label)
            elif kind is tuple:
                values[name] = _floats(raw, label)
            else:
                values[name] = raw
    return CampaignConfig(**values)


def _num(x):
    """Shortest text that parses back to the same float."""
    text = repr(float(x))
    return text[:-2] if text.endswith(".0") else text


def serialize(cfg):
    """Canonical text form; ``parse(serialize(c)) == c``."""
    lines = []
    for section, entries in _LAYOUT.items():
        lines.append(f"[{section}]")
        for key, name, kind in entries:
            v = getattr(cfg, name)
            if kind is tuple:
                text = ",".join(_num(x) for x in v)
            elif kind is float:
                text = _num(v)
            else:
                text = str(v)
            lines.append(f"{key} = {text}")
        lines.append("")
    return "\n".join(lines)


def load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return parse(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None


FIELD_NAMES = tuple(f.name for f in fields(CampaignConfig))

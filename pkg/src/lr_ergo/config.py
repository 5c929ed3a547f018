"""Experiment files: TOML parsing, validation with line diagnostics, and serialization."""
from __future__ import annotations

import re
import sys
from dataclasses import asdict, dataclass, field
from typing import Any, Callable

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .algebra import AlgebraError, DimensionCapError, LocalOperator, check_dim, operator_from_spec
from .ergodic import QuadratureSpec
from .lattice import LatticeError, Torus
from .model import DEFAULT_LAMBDA, PRESETS

COMMANDS = (
    "lr-certify", "localize", "ergodic-sweep", "oscillatory", "moments",
    "mean-square", "multi-point", "spacelike-probe", "kms-check", "hydro",
)
SWEEP_MODES = ("plain", "mean_square", "moment")
STATE_KINDS = ("tracial", "gibbs", "product")


class ConfigError(ValueError):
    """Invalid experiment file; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        self.line = line
        self.key = key
        where = f" (line {line})" if line is not None else ""
        super().__init__(message + where)
        self.message = message


@dataclass
class LatticeConfig:
    extent: tuple[int, ...]
    boundary: str = "periodic"
    site_dim: int = 2

    def torus(self) -> Torus:
        return Torus(self.extent, self.boundary)


@dataclass
class ModelConfig:
    kind: str
    couplings: dict[str, float] = field(default_factory=dict)
    decay_lambda: float = DEFAULT_LAMBDA
    terms: tuple[str, ...] = ()


@dataclass
class StateConfig:
    kind: str = "tracial"
    beta: float | None = None
    vectors: tuple[tuple[complex, ...], ...] = ()


@dataclass
class CommandConfig:
    name: str
    params: dict[str, Any] = field(default_factory=dict)
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)


@dataclass
class ExperimentConfig:
    lattice: LatticeConfig
    model: ModelConfig
    state: StateConfig
    observables: dict[str, tuple[str, ...]]
    command: CommandConfig

    def operator(self, name: str) -> LocalOperator:
        return operator_from_spec(list(self.observables[name]), self.lattice.site_dim)


# --- line lookup -------------------------------------------------------------

_HEADER = re.compile(r"^\s*\[([^\[\]]+)\]\s*(#.*)?$")


def _locate(text: str, section: str, key: str | None = None) -> int | None:
    """1-based line of ``key`` inside ``[section]`` (or of the header itself)."""
    current = ""
    pattern = re.compile(rf"^\s*\"?{re.escape(key)}\"?\s*=") if key else None
    for i, line in enumerate(text.splitlines(), 1):
        m = _HEADER.match(line)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return i
            continue
        if pattern is not None and current == section and pattern.match(line):
            return i
    return None


class _Reader:
    def __init__(self, text: str):
        self.text = text

    def fail(self, msg: str, section: str, key: str | None = None):
        line = _locate(self.text, section, key) if key else None
        if line is None:
            line = _locate(self.text, section)
        raise ConfigError(msg, line, f"{section}.{key}" if key else section)

    def table(self, doc: dict, name: str, required: bool = True) -> dict:
        if name not in doc:
            if required:
                raise ConfigError(f"missing required section [{name}]", None, name)
            return {}
        val = doc[name]
        if not isinstance(val, dict):
            raise ConfigError(f"[{name}] must be a table", _locate(self.text, name), name)
        return val

    def unknown(self, tbl: dict, section: str, allowed) -> None:
        for k in tbl:
            if k not in allowed:
                self.fail(f"unknown key {k!r} in [{section}]; allowed: {sorted(allowed)}", section, k)

    def get(self, tbl: dict, section: str, key: str, conv: Callable, default=..., required=False):
        if key not in tbl:
            if required or default is ...:
                self.fail(f"missing required key {key!r} in [{section}]", section)
            return default
        try:
            return conv(tbl[key])
        except (TypeError, ValueError) as exc:
            self.fail(f"bad value for {section}.{key}: {exc}", section, key)


# --- converters --------------------------------------------------------------

def _number(x) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ValueError(f"expected a number, got {x!r}")
    return float(x)


def _integer(x) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise ValueError(f"expected an integer, got {x!r}")
    return x


def _text(x) -> str:
    if not isinstance(x, str):
        raise ValueError(f"expected a string, got {x!r}")
    return x


def _list_of(conv) -> Callable:
    def f(x):
        if not isinstance(x, (list, tuple)):
            raise ValueError(f"expected a list, got {x!r}")
        return [conv(v) for v in x]
    return f


def _number_or_list(x) -> list[float]:
    return [_number(v) for v in x] if isinstance(x, (list, tuple)) else [_number(x)]


def _int_or_list(x) -> list[int]:
    return [_integer(v) for v in x] if isinstance(x, (list, tuple)) else [_integer(x)]


def _grid(x) -> list[float]:
    """A number, a list of numbers, or {start, stop, num} (inclusive linspace)."""
    if isinstance(x, dict):
        extra = set(x) - {"start", "stop", "num"}
        if extra or {"start", "stop", "num"} - set(x):
            raise ValueError("grid table needs exactly start, stop, num")
        a, b, n = _number(x["start"]), _number(x["stop"]), _integer(x["num"])
        if n < 1:
            raise ValueError("grid num must be >= 1")
        if n == 1:
            return [a]
        return [a + (b - a) * i / (n - 1) for i in range(n)]
    out = _number_or_list(x)
    if not out:
        raise ValueError("grid must be non-empty")
    return out


def _complex_entry(x) -> complex:
    if isinstance(x, str):
        return complex(x.replace(" ", ""))
    return complex(_number(x))


def _vector(x) -> tuple[complex, ...]:
    return tuple(_complex_entry(v) for v in _list_of(lambda y: y)(x))


def _name_pair(x) -> tuple[str, str]:
    if not isinstance(x, (list, tuple)) or len(x) != 2:
        raise ValueError(f"expected [name, name], got {x!r}")
    return (_text(x[0]), _text(x[1]))


def _vectors_list(x) -> list[list[float]]:
    """List of wavevectors; bare numbers are 1-D vectors."""
    out = []
    for v in _list_of(lambda y: y)(x):
        out.append(_number_or_list(v))
    if not out:
        raise ValueError("need at least one vector")
    return out


# Per-command parameter schema: key -> (converter, default or ... when required, kind)
# kind "obs" / "obs_list" / "obs_pairs" marks keys naming observables.
_RAY = {
    "q": (_list_of(_integer), None, None),
    "v": (_grid, ..., None),
    "T": (_grid, ..., None),
}
SCHEMAS: dict[str, dict[str, tuple]] = {
    "lr-certify": {
        "pairs": (_list_of(_name_pair), ..., "obs_pairs"),
        "times": (_grid, ..., None),
        "lambda": (_number, None, None),
    },
    "localize": {
        "A": (_text, ..., "obs"),
        "t": (_grid, ..., None),
        "radii": (_list_of(_integer), ..., None),
        "C": (_number, 4.0, None),
    },
    "ergodic-sweep": {
        "A": (_text, ..., "obs"), "B": (_text, ..., "obs"), **_RAY,
        "mode": (_text, "plain", None),
        "n": (_integer, None, None),
    },
    "oscillatory": {
        "A": (_text, ..., "obs"), "B": (_text, ..., "obs"), **_RAY,
        "k": (_number_or_list, ..., None),
        "f": (_number, ..., None),
    },
    "moments": {
        "A": (_text, ..., "obs"), **_RAY,
        "n": (_int_or_list, ..., None),
    },
    "mean-square": {
        "A": (_text, ..., "obs"), "B": (_text, ..., "obs"), **_RAY,
    },
    "multi-point": {
        "A": (_list_of(_text), ..., "obs_list"),
        "B": (_list_of(_text), ..., "obs_list"),
        "q": (_list_of(_integer), None, None),
        "v": (_number, ..., None),
        "T": (_list_of(_number), ..., None),
    },
    "spacelike-probe": {
        "A": (_text, ..., "obs"), "B": (_text, ..., "obs"),
        "n": (_list_of(_integer), ..., None),
        "v": (_number, ..., None),
        "m_max": (_integer, ..., None),
        "k": (_number_or_list, None, None),
        "f": (_number, None, None),
    },
    "kms-check": {
        "pairs": (_list_of(_name_pair), None, "obs_pairs"),
        "beta": (_number, None, None),
        "random_pairs": (_integer, 0, None),
        "seed": (_integer, 0, None),
        "times": (_grid, None, None),
    },
    "hydro": {
        "A": (_text, ..., "obs"), "B": (_text, ..., "obs"),
        "kappa": (_vectors_list, ..., None),
        "T": (_number, ..., None),
        "t_min": (_number, 1.0, None),
    },
}


def _parse_command(r: _Reader, tbl: dict, observables: dict, dim: int) -> CommandConfig:
    sec = "command"
    name = r.get(tbl, sec, "name", _text, required=True)
    if name not in COMMANDS:
        r.fail(f"unknown command {name!r}; valid commands: {', '.join(COMMANDS)}", sec, "name")
    schema = SCHEMAS[name]
    r.unknown(tbl, sec, set(schema) | {"name", "quadrature"})
    params: dict[str, Any] = {}
    for key, (conv, default, kind) in schema.items():
        val = r.get(tbl, sec, key, conv, default=default)
        if val is None:
            continue
        names = []
        if kind == "obs":
            names = [val]
        elif kind == "obs_list":
            names = val
        elif kind == "obs_pairs":
            names = [n for p in val for n in p]
            val = [list(p) for p in val]
        for n in names:
            if n not in observables:
                r.fail(f"observable {n!r} is not defined in [observables]", sec, key)
        params[key] = val
    if "q" in schema:
        q = params.get("q") or [1] + [0] * (dim - 1)
        if len(q) != dim or not any(q):
            r.fail(f"direction q must be a nonzero integer vector of length {dim}", sec, "q")
        params["q"] = q
    params = {k: params[k] for k in schema if k in params}
    if "k" in params and len(params["k"]) != dim:
        r.fail(f"k must have {dim} components", sec, "k")
    if name == "spacelike-probe" and len(params["n"]) != dim:
        r.fail(f"shift n must have {dim} components", sec, "n")
    if name == "spacelike-probe" and (("k" in params) != ("f" in params)):
        r.fail("k and f must be given together", sec, "k" if "k" in params else "f")
    if name == "ergodic-sweep":
        if params["mode"] not in SWEEP_MODES:
            r.fail(f"unknown sweep mode {params['mode']!r}; valid: {', '.join(SWEEP_MODES)}", sec, "mode")
        if params["mode"] == "moment" and "n" not in params:
            r.fail("moment mode needs n", sec, "mode")
    if name == "hydro":
        for kv in params["kappa"]:
            if len(kv) != dim:
                r.fail(f"each kappa must have {dim} components", sec, "kappa")
    if name == "multi-point" and len(params["A"]) != len(params["B"]) + 1:
        r.fail("multi-point needs len(A) = len(B) + 1", sec, "A")
    if name == "multi-point" and len(params["T"]) != len(params["B"]):
        r.fail("multi-point needs one horizon T per averaged operator B", sec, "T")

    qt = tbl.get("quadrature", {})
    if not isinstance(qt, dict):
        r.fail("[command.quadrature] must be a table", sec, "quadrature")
    qs = "command.quadrature"
    r.unknown(qt, qs, {"scheme", "dt", "per_piece_order", "panel_factor"})
    try:
        quad = QuadratureSpec(
            scheme=r.get(qt, qs, "scheme", _text, "breakpoint_exact"),
            dt=r.get(qt, qs, "dt", _number, None),
            per_piece_order=r.get(qt, qs, "per_piece_order", _integer, 8),
            panel_factor=r.get(qt, qs, "panel_factor", _number, 4.0),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        r.fail(str(exc), qs, "scheme")
    return CommandConfig(name, params, quad)


def parse_config(text: str) -> ExperimentConfig:
    """Validate an experiment file; the first problem raises ConfigError with its line."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"malformed TOML: {exc}", int(m.group(1)) if m else None) from exc
    r = _Reader(text)
    r.unknown(doc, "", {"lattice", "model", "state", "observables", "command"})

    lt = r.table(doc, "lattice")
    r.unknown(lt, "lattice", {"extent", "boundary", "site_dim"})
    extent = tuple(r.get(lt, "lattice", "extent", _int_or_list, required=True))
    boundary = r.get(lt, "lattice", "boundary", _text, "periodic")
    site_dim = r.get(lt, "lattice", "site_dim", _integer, 2)
    try:
        torus = Torus(extent, boundary)
    except (LatticeError, ValueError) as exc:
        r.fail(str(exc), "lattice", "extent")
    if site_dim < 2:
        r.fail("site_dim must be >= 2", "lattice", "site_dim")
    try:
        check_dim(torus.n_sites, site_dim)
    except DimensionCapError as exc:
        r.fail(
            f"Hilbert dimension {site_dim}^{torus.n_sites} = {exc.dim} exceeds the cap {exc.cap}",
            "lattice", "extent",
        )
    lattice = LatticeConfig(extent, boundary, site_dim)

    mt = r.table(doc, "model")
    r.unknown(mt, "model", {"kind", "couplings", "lambda", "terms"})
    kind = r.get(mt, "model", "kind", _text, required=True)
    if kind not in PRESETS:
        r.fail(f"unknown model kind {kind!r}; valid: {', '.join(PRESETS)}", "model", "kind")
    couplings_raw = mt.get("couplings", {})
    if not isinstance(couplings_raw, dict):
        r.fail("couplings must be a table", "model", "couplings")
    couplings = {}
    for k, v in couplings_raw.items():
        if kind != "custom" and k not in PRESETS[kind]:
            r.fail(f"coupling {k!r} not valid for {kind}; valid: {sorted(PRESETS[kind])}", "model", "couplings")
        try:
            couplings[k] = _number(v)
        except ValueError as exc:
            r.fail(f"coupling {k}: {exc}", "model", "couplings")
    lam = r.get(mt, "model", "lambda", _number, DEFAULT_LAMBDA)
    if not lam > 0:
        r.fail("lambda must be positive", "model", "lambda")
    terms = tuple(r.get(mt, "model", "terms", _list_of(_text), []))
    if kind == "custom" and not terms:
        r.fail("custom model needs a terms list", "model", "kind")
    if kind != "custom" and terms:
        r.fail("terms are only allowed for kind = 'custom'", "model", "terms")
    for t in terms:
        try:
            operator_from_spec(t, site_dim)
        except (AlgebraError, ValueError) as exc:
            r.fail(f"bad term {t!r}: {exc}", "model", "terms")
    model = ModelConfig(kind, couplings, lam, terms)

    st = r.table(doc, "state", required=False)
    r.unknown(st, "state", {"kind", "beta", "vectors"})
    skind = r.get(st, "state", "kind", _text, "tracial")
    if skind not in STATE_KINDS:
        r.fail(f"unknown state kind {skind!r}; valid: {', '.join(STATE_KINDS)}", "state", "kind")
    beta = r.get(st, "state", "beta", _number, None)
    vectors = tuple(r.get(st, "state", "vectors", _list_of(_vector), []))
    if skind == "gibbs" and (beta is None or beta < 0):
        r.fail("gibbs state needs beta >= 0", "state", "beta" if beta is not None else "kind")
    if skind == "product":
        if not vectors:
            r.fail("product state needs vectors", "state", "kind")
        if len(vectors) not in (1, torus.n_sites) or any(len(v) != site_dim for v in vectors):
            r.fail(f"need 1 or {torus.n_sites} vectors of length {site_dim}", "state", "vectors")
    state = StateConfig(skind, beta, vectors)

    ot = r.table(doc, "observables", required=False)
    observables: dict[str, tuple[str, ...]] = {}
    for name, spec in ot.items():
        texts = [spec] if isinstance(spec, str) else spec
        if not isinstance(texts, list) or not texts or not all(isinstance(t, str) for t in texts):
            r.fail(f"observable {name!r} must be a string or list of strings", "observables", name)
        try:
            op = operator_from_spec(texts, site_dim)
        except (AlgebraError, ValueError) as exc:
            r.fail(f"observable {name!r}: {exc}", "observables", name)
        for s in op.support:
            if len(s) != torus.dim or not torus.in_box(s):
                r.fail(f"observable {name!r} touches site {s} outside the lattice box", "observables", name)
        observables[name] = tuple(texts)

    ct = r.table(doc, "command")
    command = _parse_command(r, ct, observables, torus.dim)
    return ExperimentConfig(lattice, model, state, observables, command)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _complex_out(z: complex):
    z = complex(z)
    return z.real if z.imag == 0 else str(z)


def to_document(cfg: ExperimentConfig) -> dict:
    """Normalized plain-data form (all defaults explicit)."""
    doc: dict[str, Any] = {
        "lattice": {"extent": list(cfg.lattice.extent), "boundary": cfg.lattice.boundary, "site_dim": cfg.lattice.site_dim},
        "model": {"kind": cfg.model.kind, "lambda": cfg.model.decay_lambda},
        "state": {"kind": cfg.state.kind},
        "observables": {k: (v[0] if len(v) == 1 else list(v)) for k, v in cfg.observables.items()},
    }
    if cfg.model.couplings:
        doc["model"]["couplings"] = dict(cfg.model.couplings)
    if cfg.model.terms:
        doc["model"]["terms"] = list(cfg.model.terms)
    if cfg.state.beta is not None:
        doc["state"]["beta"] = cfg.state.beta
    if cfg.state.vectors:
        doc["state"]["vectors"] = [[_complex_out(z) for z in v] for v in cfg.state.vectors]
    cmd = {"name": cfg.command.name}
    cmd.update({k: v for k, v in cfg.command.params.items() if v is not None})
    quad = {k: v for k, v in asdict(cfg.command.quadrature).items() if v is not None}
    cmd["quadrature"] = quad
    doc["command"] = cmd
    return doc


def serialize(cfg: ExperimentConfig) -> str:
    return tomli_w.dumps(to_document(cfg))

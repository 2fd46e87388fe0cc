"""Experiment configuration: JSON in, validated :class:`ExperimentConfig` out."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .group import D4_SPEC, S3_SPEC, GroupSpec
from .hilbert import DEFAULT_BUDGET
from .lattice import build_layout

KINDS = ("verify", "protocol", "syndromes", "decode", "magic")
BACKENDS = ("exact", "syndrome")
GROUPS = {"S3": S3_SPEC, "D4": D4_SPEC}
RATE_KEYS = ("p_X", "p_Z", "p_Xq", "p_Zq")

# per-kind layout defaults; the S3 patch kinds share the minimal patch
_PATCH = {"rows": 2, "columns": 3, "qutrit_window": [1, 2]}
_DEFAULTS = {
    "verify": dict(_PATCH),
    "syndromes": dict(_PATCH, shots=10000),
    "decode": dict(_PATCH, rates={k: 0.0 for k in RATE_KEYS}),
    "protocol": {"rows": 2, "qubit_window": [0, 1], "qutrit_window": [2, 3], "group": "S3"},
    "magic": {"shots": 10000, "cross_check": False, "runs": 4},
}
_KNOWN = {"kind", "seed", "trials", "backend", "out", "budget", "rows", "columns",
          "qubit_window", "qutrit_window", "group", "rates", "shots", "cross_check", "runs"}


class ConfigError(ValueError):
    """Every field-level problem found in one document."""

    def __init__(self, errors: list):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    seed: int
    trials: int = 1
    backend: str = "exact"
    out: str | None = None
    budget: int = DEFAULT_BUDGET
    rows: int = 2
    columns: int | None = None
    qubit_window: tuple | None = None
    qutrit_window: tuple | None = None
    group: str = "S3"
    rates: dict = field(default_factory=dict)
    shots: int = 0
    cross_check: bool = False
    runs: int = 4

    @property
    def group_spec(self) -> GroupSpec:
        return GROUPS[self.group]

    def echo(self) -> dict:
        d = asdict(self)
        for k in ("qubit_window", "qutrit_window"):
            if d[k] is not None:
                d[k] = list(d[k])
        return d


def _window(v, name, errors):
    if v is None:
        return None
    if (not isinstance(v, (list, tuple)) or len(v) != 2
            or not all(isinstance(x, int) and not isinstance(x, bool) for x in v)):
        errors.append(f"{name}: expected [start, stop] integers, got {v!r}")
        return None
    if not 0 <= v[0] <= v[1]:
        errors.append(f"{name}: need 0 <= start <= stop, got {v!r}")
        return None
    return tuple(v)


def _int(doc, key, errors, minimum=0):
    v = doc[key]
    if not isinstance(v, int) or isinstance(v, bool) or v < minimum:
        errors.append(f"{key}: expected an integer >= {minimum}, got {v!r}")
        return None
    return v


def patch_dimension(rows: int, columns: int, qutrit_window: tuple) -> int:
    """Peak register dimension of an S3 patch: all edges, one measurement ancilla."""
    lay = build_layout(rows, columns, (0, qutrit_window[1]), tuple(qutrit_window))
    return 2 ** len(lay.edges(lay.qubit_window)) * 3 ** len(lay.edges(lay.qutrit_window)) * 2


def parse_config(document, overrides: dict | None = None) -> ExperimentConfig:
    """Validate a JSON document (text or already-parsed dict).

    ``overrides`` (e.g. from command-line flags) win over the document.  All problems
    are collected and raised together as one :class:`ConfigError`.
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"malformed JSON: {exc}"]) from None
    if not isinstance(document, dict):
        raise ConfigError(["top level must be a JSON object"])
    doc = dict(document)
    doc.update({k: v for k, v in (overrides or {}).items() if v is not None})

    errors = []
    kind = doc.get("kind")
    if kind not in KINDS:
        errors.append(f"kind: unknown kind {kind!r}; expected one of {', '.join(KINDS)}")
        raise ConfigError(errors + _seed_errors(doc))
    unknown = sorted(set(doc) - _KNOWN)
    if unknown:
        errors.append(f"unknown fields: {', '.join(unknown)}")
    errors += _seed_errors(doc)

    merged = dict(_DEFAULTS[kind])
    merged.update(doc)
    vals = {"kind": kind, "seed": doc.get("seed")}

    vals["backend"] = merged.get("backend", "exact")
    if vals["backend"] not in BACKENDS:
        errors.append(f"backend: expected exact or syndrome, got {vals['backend']!r}")
    for key, minimum in (("trials", 1), ("budget", 1), ("rows", 1), ("shots", 0), ("runs", 1)):
        if key in merged:
            vals[key] = _int(merged, key, errors, minimum)
    if "columns" in merged:
        vals["columns"] = _int(merged, "columns", errors, 1)
    vals["qubit_window"] = _window(merged.get("qubit_window"), "qubit_window", errors)
    vals["qutrit_window"] = _window(merged.get("qutrit_window"), "qutrit_window", errors)
    if "out" in merged:
        vals["out"] = str(merged["out"])
    if "cross_check" in merged:
        vals["cross_check"] = bool(merged["cross_check"])

    group = merged.get("group", "S3")
    if group not in GROUPS:
        errors.append(f"group: expected S3 or D4, got {group!r}")
    elif group != "S3" and kind != "protocol":
        errors.append(f"group: {group} is only supported by the protocol kind")
    vals["group"] = group

    rates = merged.get("rates", {})
    if kind == "decode":
        if not isinstance(rates, dict):
            errors.append("rates: expected an object")
            rates = {}
        clean = {}
        for k in RATE_KEYS:
            p = rates.get(k, 0.0)
            if not isinstance(p, (int, float)) or isinstance(p, bool) or not 0 <= p <= 0.5:
                errors.append(f"rates.{k}: {p!r} outside [0, 1/2]")
            else:
                clean[k] = float(p)
        extra = sorted(set(rates) - set(RATE_KEYS))
        if extra:
            errors.append(f"rates: unknown keys {', '.join(extra)}")
        vals["rates"] = clean

    if not errors:
        errors += _geometry_errors(vals)
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(**{k: v for k, v in vals.items() if v is not None})


def _seed_errors(doc) -> list:
    s = doc.get("seed")
    if s is None:
        return ["seed: missing (a seed is mandatory)"]
    if not isinstance(s, int) or isinstance(s, bool) or s < 0:
        return [f"seed: expected a non-negative integer, got {s!r}"]
    return []


def _geometry_errors(vals) -> list:
    budget = vals.get("budget", DEFAULT_BUDGET)
    kind = vals["kind"]
    if kind == "magic":
        return []
    if kind == "protocol":
        from .protocol import ProtocolConfig
        qw, tw = vals.get("qubit_window"), vals.get("qutrit_window")
        if qw is None or tw is None:
            return ["protocol: qubit_window and qutrit_window are required"]
        pc = ProtocolConfig(rows=vals["rows"], qubit_window=qw, qutrit_window=tw,
                            group=GROUPS[vals["group"]], seed=vals["seed"], budget=budget)
        try:
            pc.validate()
        except ValueError as exc:
            return [f"protocol: {exc}"]
        return []
    tw, cols = vals.get("qutrit_window"), vals.get("columns")
    if tw is None or cols is None:
        return [f"{kind}: columns and qutrit_window are required"]
    if tw[0] < 1 or tw[1] >= cols:
        return [f"qutrit_window {list(tw)} must lie in columns 1..{cols - 1}"]
    dim = patch_dimension(vals["rows"], cols, tw)
    if dim > budget:
        return [f"dimension budget: patch needs dimension {dim} > budget {budget}"]
    return []

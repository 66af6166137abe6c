"""Line-oriented scenario files.

Grammar::

    # comment (also allowed after a value)
    [model]
    horizon = 1.0
    intervals = 8
    commodities = 2
    truncate = true               # optional

    [producer NAME]               # zero or more
    lower = -0.5, -0.2            # l values (constant) or m*l values (interval-major)
    upper = 0.5, 0.2
    cut.1 = 1, 1                  # optional affine cut <<c, a>> <= rhs
    rhs.1 = 0.3

    [consumer NAME]               # one or more
    endowment = 1.0, 0.5
    lower = 0, 0
    upper = 3, 3                  # optional
    utility = shifted_log         # linear | shifted_log | quadratic
    weights = 0.6, 0.4            # linear: l or m*l values; shifted_log: l values
    offset = 0.1                  # shifted_log only
    target = 1, 1                 # quadratic only
    scale = 1.0                   # quadratic only, optional
    shares = 1.0                  # one entry per producer, in file order

    [solver]
    seed = 0                      # mandatory
    response = extragradient      # best | projection | extragradient
    order = jacobi                # jacobi | gauss-seidel
    damping = 0.3
    decay = 0
    step = 0.5
    max_iters = 5000
    gap_tol = 1e-6
    inner_tol = 1e-9

    [tolerances]                  # optional certificate tolerances
    producer = 1e-8

    [output]                      # optional, paths relative to the run directory
    report = report.txt
    series = series.csv

Every value is a real, an integer, a word, or a comma-separated list of reals.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

from .economy import (
    Consumer,
    EconomyModel,
    LinearUtility,
    Producer,
    ProductionSet,
    QuadraticUtility,
    ShiftedLogUtility,
    build_model,
)
from .errors import ScenarioError
from .fnspace import make_grid
from .gnep import SolverSchedule
from .verify import Tolerances

_HEADER = re.compile(r"^\[\s*(model|producer|consumer|solver|tolerances|output)(?:\s+([A-Za-z0-9_.-]+))?\s*\]$")
_KEY = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*(\.[0-9]+)?$")
UTILITIES = ("linear", "shifted_log", "quadratic")


@dataclass(frozen=True)
class ModelSpec:
    horizon: float
    intervals: int
    commodities: int
    truncate: bool = True


@dataclass(frozen=True)
class ProducerSpec:
    name: str
    lower: tuple
    upper: tuple
    cuts: tuple = ()  # ((coef tuple, rhs), ...)


@dataclass(frozen=True)
class ConsumerSpec:
    name: str
    endowment: tuple
    lower: tuple
    utility: str
    shares: tuple = ()
    upper: Optional[tuple] = None
    weights: Optional[tuple] = None
    offset: Optional[float] = None
    target: Optional[tuple] = None
    scale: Optional[float] = None


@dataclass(frozen=True)
class SolverSpec:
    seed: int
    response: str = "extragradient"
    order: str = "jacobi"
    damping: float = 0.3
    decay: float = 0.0
    step: float = 0.5
    max_iters: int = 5000
    gap_tol: float = 1e-6
    inner_tol: float = 1e-9


@dataclass(frozen=True)
class OutputSpec:
    report: str = "report.txt"
    series: str = "series.csv"


@dataclass(frozen=True)
class Scenario:
    model: ModelSpec
    producers: tuple
    consumers: tuple
    solver: SolverSpec
    tolerances: Tolerances = field(default_factory=Tolerances)
    output: OutputSpec = field(default_factory=OutputSpec)

    def schedule(self) -> SolverSchedule:
        s = self.solver
        return SolverSchedule(damping=s.damping, decay=s.decay, max_iters=s.max_iters, gap_tol=s.gap_tol,
                              inner_tol=s.inner_tol, response=s.response, step=s.step, order=s.order)

    def build(self) -> EconomyModel:
        """The economy described by the scenario (not yet validated)."""
        ms = self.model
        grid = make_grid(ms.horizon, ms.intervals)
        shape = (ms.intervals, ms.commodities)
        prods = [Producer(p.name, ProductionSet(_field(p.lower, shape, p.name, "lower"),
                                                _field(p.upper, shape, p.name, "upper"),
                                                tuple((_field(c, shape, p.name, "cut"), r) for c, r in p.cuts)))
                 for p in self.producers]
        cons = []
        for c in self.consumers:
            if c.utility == "linear":
                u = LinearUtility(_field(c.weights, shape, c.name, "weights"))
            elif c.utility == "shifted_log":
                if c.weights is None or len(c.weights) != ms.commodities:
                    raise ScenarioError(f"consumer {c.name}: shifted_log weights need {ms.commodities} values")
                u = ShiftedLogUtility(np.array(c.weights), c.offset)
            else:
                u = QuadraticUtility(_field(c.target, shape, c.name, "target"), 1.0 if c.scale is None else c.scale)
            upper = None if c.upper is None else _field(c.upper, shape, c.name, "upper")
            cons.append(Consumer(c.name, _field(c.endowment, shape, c.name, "endowment"),
                                 _field(c.lower, shape, c.name, "lower"), u, upper))
        return build_model(grid, ms.commodities, prods, cons, [c.shares for c in self.consumers], ms.truncate)


def _field(values, shape, who, what) -> np.ndarray:
    v = np.array(values, dtype=float)
    m, l = shape
    if v.size == l:
        return np.tile(v, (m, 1))
    if v.size == m * l:
        return v.reshape(m, l)
    raise ScenarioError(f"{who}: {what} has {v.size} values, expected {l} or {m * l}")


# ------------------------------------------------------------------- parsing


@dataclass
class _Entry:
    value: str
    line: int


@dataclass
class _Section:
    kind: str
    name: Optional[str]
    line: int
    entries: dict = field(default_factory=dict)

    @property
    def label(self) -> str:
        return self.kind if self.name is None else f"{self.kind} {self.name}"


def _strip(raw: str) -> str:
    return raw.split("#", 1)[0].strip()


def read_sections(text: str) -> list:
    """Stage one: split ``text`` into sections of raw key/value entries."""
    sections, cur, seen = [], None, set()
    for no, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        if line.startswith("["):
            mt = _HEADER.match(line)
            if not mt:
                raise ScenarioError(f"malformed section header {line!r}", line=no)
            kind, name = mt.group(1), mt.group(2)
            if kind in ("producer", "consumer") and name is None:
                raise ScenarioError(f"[{kind}] needs a name", line=no)
            if kind not in ("producer", "consumer") and name is not None:
                raise ScenarioError(f"[{kind}] takes no name", line=no)
            cur = _Section(kind, name, no)
            if cur.label in seen:
                raise ScenarioError(f"duplicate section [{cur.label}]", line=no)
            seen.add(cur.label)
            sections.append(cur)
            continue
        if "=" not in line:
            raise ScenarioError(f"expected 'key = value', got {line!r}", line=no)
        if cur is None:
            raise ScenarioError("key outside of any section", line=no)
        key, value = (t.strip() for t in line.split("=", 1))
        if not _KEY.match(key):
            raise ScenarioError(f"malformed key {key!r}", line=no)
        if not value:
            raise ScenarioError(f"empty value for {key!r}", line=no)
        if key in cur.entries:
            raise ScenarioError(f"duplicate key {key!r} (first set on line {cur.entries[key].line})", line=no)
        cur.entries[key] = _Entry(value, no)
    return sections


def apply_override(sections: list, spec: str) -> None:
    """Apply ``section.key=value`` (``producer.NAME.key`` for named sections)."""
    if "=" not in spec:
        raise ScenarioError(f"override {spec!r} is not of the form section.key=value")
    path, value = (t.strip() for t in spec.split("=", 1))
    parts = path.split(".")
    if parts[0] in ("producer", "consumer"):
        if len(parts) < 3:
            raise ScenarioError(f"override {spec!r} needs {parts[0]}.NAME.key")
        label, key = f"{parts[0]} {parts[1]}", ".".join(parts[2:])
    else:
        if len(parts) < 2:
            raise ScenarioError(f"override {spec!r} needs section.key")
        label, key = parts[0], ".".join(parts[1:])
    for sec in sections:
        if sec.label == label:
            sec.entries[key] = _Entry(value, 0)
            return
    kind, _, name = label.partition(" ")
    if kind not in ("solver", "tolerances", "output"):
        raise ScenarioError(f"override {spec!r}: no section [{label}]")
    sections.append(_Section(kind, name or None, 0, {key: _Entry(value, 0)}))


class _Reader:
    def __init__(self, sec: _Section):
        self.sec = sec
        self.used = set()

    def _get(self, key, required):
        e = self.sec.entries.get(key)
        if e is None:
            if required:
                raise ScenarioError(f"[{self.sec.label}] is missing required key {key!r}", line=self.sec.line)
            return None
        self.used.add(key)
        return e

    def _fail(self, e, msg):
        raise ScenarioError(f"[{self.sec.label}] {msg}", line=e.line or None)

    def real(self, key, required=False):
        e = self._get(key, required)
        if e is None:
            return None
        try:
            v = float(e.value)
        except ValueError:
            self._fail(e, f"{key} = {e.value!r} is not a real number")
        if not np.isfinite(v):
            self._fail(e, f"{key} must be finite")
        return v

    def integer(self, key, required=False):
        e = self._get(key, required)
        if e is None:
            return None
        try:
            return int(e.value)
        except ValueError:
            self._fail(e, f"{key} = {e.value!r} is not an integer")

    def word(self, key, choices=None, required=False):
        e = self._get(key, required)
        if e is None:
            return None
        if choices is not None and e.value not in choices:
            self._fail(e, f"{key} must be one of {', '.join(choices)}, got {e.value!r}")
        return e.value

    def boolean(self, key):
        e = self._get(key, False)
        if e is None:
            return None
        v = e.value.lower()
        if v not in ("true", "false"):
            self._fail(e, f"{key} must be true or false")
        return v == "true"

    def reals(self, key, required=False):
        e = self._get(key, required)
        if e is None:
            return None
        try:
            vals = tuple(float(t) for t in e.value.split(","))
        except ValueError:
            self._fail(e, f"{key} = {e.value!r} is not a comma-separated list of reals")
        if not all(np.isfinite(vals)):
            self._fail(e, f"{key} must be finite")
        return vals

    def finish(self, extra=()):
        for key, e in self.sec.entries.items():
            if key not in self.used and key not in extra:
                raise ScenarioError(f"[{self.sec.label}] unknown key {key!r}", line=e.line or None)


def _field_at(sec, key):
    e = sec.entries.get(key)
    return e.line if e else sec.line


def from_sections(sections: list) -> Scenario:
    """Stage two: typed scenario from raw sections."""
    by_kind = {}
    for sec in sections:
        by_kind.setdefault(sec.kind, []).append(sec)
    if "model" not in by_kind:
        raise ScenarioError("missing [model] section")
    if "solver" not in by_kind:
        raise ScenarioError("missing [solver] section (the seed is mandatory)")

    rd = _Reader(by_kind["model"][0])
    model = ModelSpec(rd.real("horizon", True), rd.integer("intervals", True), rd.integer("commodities", True),
                      True if (t := rd.boolean("truncate")) is None else t)
    rd.finish()
    sec = by_kind["model"][0]
    if model.horizon <= 0:
        raise ScenarioError("horizon must be positive", line=_field_at(sec, "horizon"))
    if model.intervals < 1:
        raise ScenarioError("intervals must be at least 1", line=_field_at(sec, "intervals"))
    if model.commodities < 1:
        raise ScenarioError("commodities must be at least 1", line=_field_at(sec, "commodities"))

    producers = []
    for sec in by_kind.get("producer", []):
        rd = _Reader(sec)
        lower, upper = rd.reals("lower", True), rd.reals("upper", True)
        cut_ids = sorted({k.split(".")[1] for k in sec.entries if k.startswith(("cut.", "rhs."))}, key=int)
        cuts = []
        for q in cut_ids:
            coef, rhs = rd.reals(f"cut.{q}", True), rd.real(f"rhs.{q}", True)
            cuts.append((coef, rhs))
        rd.finish()
        producers.append(ProducerSpec(sec.name, lower, upper, tuple(cuts)))

    consumers = []
    for sec in by_kind.get("consumer", []):
        rd = _Reader(sec)
        kind = rd.word("utility", UTILITIES, True)
        spec = ConsumerSpec(
            name=sec.name, endowment=rd.reals("endowment", True), lower=rd.reals("lower", True), utility=kind,
            shares=rd.reals("shares", bool(producers)) or (), upper=rd.reals("upper"),
        )
        if kind == "linear":
            spec = replace(spec, weights=rd.reals("weights", True))
        elif kind == "shifted_log":
            spec = replace(spec, weights=rd.reals("weights", True), offset=rd.real("offset", True))
        else:
            spec = replace(spec, target=rd.reals("target", True), scale=rd.real("scale"))
        rd.finish()
        consumers.append(spec)

    rd = _Reader(by_kind["solver"][0])
    seed = rd.integer("seed", True)
    kw = {}
    for f in fields(SolverSpec):
        if f.name == "seed":
            continue
        if f.name in ("response", "order"):
            v = rd.word(f.name)
        elif f.name == "max_iters":
            v = rd.integer(f.name)
        else:
            v = rd.real(f.name)
        if v is not None:
            kw[f.name] = v
    rd.finish()
    solver = SolverSpec(seed, **kw)
    try:
        Scenario(model, (), (), solver).schedule()
    except ValueError as exc:
        raise ScenarioError(f"[solver] {exc}", line=by_kind["solver"][0].line) from None

    tol = Tolerances()
    if "tolerances" in by_kind:
        rd = _Reader(by_kind["tolerances"][0])
        kw = {f.name: v for f in fields(Tolerances) if (v := rd.real(f.name)) is not None}
        rd.finish()
        for k, v in kw.items():
            if v <= 0:
                raise ScenarioError(f"tolerance {k} must be positive", line=_field_at(by_kind["tolerances"][0], k))
        tol = Tolerances(**kw)

    out = OutputSpec()
    if "output" in by_kind:
        rd = _Reader(by_kind["output"][0])
        kw = {f.name: v for f in fields(OutputSpec) if (v := rd.word(f.name)) is not None}
        rd.finish()
        out = OutputSpec(**kw)

    return Scenario(model, tuple(producers), tuple(consumers), solver, tol, out)


def parse_scenario(text: str, overrides=()) -> Scenario:
    """Parse scenario text; raises :class:`ScenarioError` carrying a line number."""
    sections = read_sections(text)
    for spec in overrides:
        apply_override(sections, spec)
    return from_sections(sections)


def load_scenario(path, overrides=()) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read(), overrides)


# -------------------------------------------------------------- serializing


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return "%.17g" % v
    if isinstance(v, tuple):
        return ", ".join("%.17g" % x for x in v)
    return str(v)


def serialize_scenario(sc: Scenario) -> str:
    """Text that parses back to an equal :class:`Scenario`."""
    out = ["[model]"]
    out += [f"{f.name} = {_fmt(getattr(sc.model, f.name))}" for f in fields(ModelSpec)]
    for p in sc.producers:
        out += ["", f"[producer {p.name}]", f"lower = {_fmt(p.lower)}", f"upper = {_fmt(p.upper)}"]
        for q, (coef, rhs) in enumerate(p.cuts, start=1):
            out += [f"cut.{q} = {_fmt(coef)}", f"rhs.{q} = {_fmt(rhs)}"]
    for c in sc.consumers:
        out += ["", f"[consumer {c.name}]"]
        for f in fields(ConsumerSpec):
            v = getattr(c, f.name)
            if f.name == "name" or v is None or (f.name == "shares" and not v):
                continue
            out.append(f"{f.name} = {_fmt(v)}")
    for label, obj in (("solver", sc.solver), ("tolerances", sc.tolerances), ("output", sc.output)):
        out += ["", f"[{label}]"]
        out += [f"{f.name} = {_fmt(getattr(obj, f.name))}" for f in fields(obj)]
    return "\n".join(out) + "\n"


__all__ = [
    "Scenario",
    "ModelSpec",
    "ProducerSpec",
    "ConsumerSpec",
    "SolverSpec",
    "OutputSpec",
    "parse_scenario",
    "load_scenario",
    "serialize_scenario",
    "apply_override",
]

"""Scenario files: a single YAML document describing the network, the
initial-condition sampler, the integrator, and the experiment to run.

Scenarios round-trip (emit then parse gives an equal scenario) and, together
with a seed, determine every experiment output byte for byte. Coupling
entries use 1-based oscillator indices in files; entry (i, j) feeds
oscillator j's projected state into oscillator i's equation.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .coupling import interconnection_from_edges, make_coupling
from .dynamics import Network, vdp_damping
from .simulate import IntegratorConfig

__all__ = [
    "ScenarioError",
    "CouplingEntry",
    "NetworkSpec",
    "InitialSpec",
    "ExperimentSpec",
    "OutputSpec",
    "Scenario",
    "load_scenario",
    "parse_scenario",
    "save_scenario",
    "scenario_to_dict",
    "build_network",
    "sample_initial",
    "draw_rng",
    "RNG_ALGORITHM",
]

EXPERIMENT_KINDS = ("single-run", "omega-sweep", "omega-star-search", "average-vs-original")
INITIAL_KINDS = ("explicit", "annulus", "anywhere")

# Identifier of the random stream recorded in every summary: PCG64 seeded by
# SeedSequence([seed, draw_index]).
RNG_ALGORITHM = "numpy-pcg64-seedseq(seed,draw)"


class ScenarioError(ValueError):
    """Scenario file is syntactically or semantically invalid."""


def draw_rng(seed: int, draw: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, draw])))


@dataclass(frozen=True)
class CouplingEntry:
    i: int  # 1-based row (affected oscillator)
    j: int  # 1-based column (influencing oscillator)
    kind: str
    gain: float | None = None
    cap: float | None = None
    table_s: tuple[float, ...] | None = None
    table_y: tuple[float, ...] | None = None


@dataclass(frozen=True)
class NetworkSpec:
    m: int
    omega: float
    kind: str = "lienard"  # or "harmonic"
    damping: dict = field(default_factory=dict)  # {"kind": "vdp", "epsilon": ...}
    projection: str = "velocity"
    coupling: tuple[CouplingEntry, ...] = ()


@dataclass(frozen=True)
class InitialSpec:
    kind: str = "annulus"
    states: tuple[float, ...] | None = None  # explicit: flat [q1, p1, ...]
    r_lo: float = 0.5
    r_hi: float = 5.0
    arc: float = 0.9 * math.pi
    arc_center: float | str = "random"
    radius: float = 10.0  # anywhere: disk radius per oscillator


@dataclass(frozen=True)
class ExperimentSpec:
    kind: str = "single-run"
    system: str = "original"  # single-run: original | rotating | averaged
    omegas: tuple[float, ...] = ()
    threshold: float = 0.05  # settle threshold for sweep records
    draws: int = 5  # IC draws for the omega-star search
    delta: float | None = None  # omega-star target residual (default: threshold)
    Delta: float | None = None  # omega-star IC norm bound (default: sampler radius)
    with_deviation: bool = False  # sweeps: also run the averaging comparison
    requires_connectivity: bool | None = None  # None: default per kind


@dataclass(frozen=True)
class OutputSpec:
    dir: str = "out"
    prefix: str | None = None


@dataclass(frozen=True)
class Scenario:
    name: str
    network: NetworkSpec
    initial: InitialSpec = InitialSpec()
    integrator: IntegratorConfig = IntegratorConfig()
    experiment: ExperimentSpec = ExperimentSpec()
    output: OutputSpec = OutputSpec()
    seed: int = 0

    def connectivity_required(self) -> bool:
        if self.experiment.requires_connectivity is not None:
            return self.experiment.requires_connectivity
        return self.experiment.kind in ("omega-sweep", "omega-star-search")


def _req(mapping: dict, key: str, ctx: str):
    if key not in mapping:
        raise ScenarioError(f"{ctx}: missing required field '{key}'")
    return mapping[key]


def _num(value, ctx: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{ctx}: expected a number, got {value!r}")
    return float(value)


def _parse_coupling_entry(raw: dict, ctx: str) -> CouplingEntry:
    if not isinstance(raw, dict):
        raise ScenarioError(f"{ctx}: coupling entries must be mappings")
    i = int(_num(_req(raw, "i", ctx), f"{ctx}.i"))
    j = int(_num(_req(raw, "j", ctx), f"{ctx}.j"))
    kind = _req(raw, "kind", ctx)
    entry = CouplingEntry(
        i=i,
        j=j,
        kind=kind,
        gain=float(raw["gain"]) if "gain" in raw else None,
        cap=float(raw["cap"]) if "cap" in raw else None,
        table_s=tuple(float(x) for x in raw["table_s"]) if "table_s" in raw else None,
        table_y=tuple(float(x) for x in raw["table_y"]) if "table_y" in raw else None,
    )
    return entry


def parse_scenario(doc: dict, source: str = "<scenario>") -> Scenario:
    """Build a Scenario from a parsed YAML mapping, with field diagnostics."""
    if not isinstance(doc, dict):
        raise ScenarioError(f"{source}: top level must be a mapping")
    name = doc.get("name") or Path(source).stem

    net_raw = _req(doc, "network", source)
    m = int(_num(_req(net_raw, "m", "network"), "network.m"))
    omega = _num(_req(net_raw, "omega", "network"), "network.omega")
    kind = net_raw.get("kind", "lienard")
    if kind not in ("lienard", "harmonic"):
        raise ScenarioError(f"network.kind: expected 'lienard' or 'harmonic', got {kind!r}")
    damping = dict(net_raw.get("damping", {}))
    if kind == "lienard" and not damping:
        raise ScenarioError("network.damping: required for lienard networks")
    if kind == "harmonic" and damping:
        raise ScenarioError("network.damping: must be absent for harmonic networks")
    coupling = tuple(
        _parse_coupling_entry(e, f"network.coupling[{k}]")
        for k, e in enumerate(net_raw.get("coupling", []))
    )
    for k, e in enumerate(coupling):
        if not (1 <= e.i <= m and 1 <= e.j <= m) or e.i == e.j:
            raise ScenarioError(
                f"network.coupling[{k}]: indices ({e.i}, {e.j}) invalid for m={m}"
            )
    network = NetworkSpec(
        m=m,
        omega=omega,
        kind=kind,
        damping=damping,
        projection=net_raw.get("projection", "velocity"),
        coupling=coupling,
    )
    if network.projection not in ("velocity", "position"):
        raise ScenarioError("network.projection: expected 'velocity' or 'position'")

    init_raw = doc.get("initial", {})
    init_kind = init_raw.get("kind", "annulus")
    if init_kind not in INITIAL_KINDS:
        raise ScenarioError(f"initial.kind: expected one of {INITIAL_KINDS}, got {init_kind!r}")
    states = None
    if init_kind == "explicit":
        raw_states = _req(init_raw, "states", "initial")
        flat: list[float] = []
        for s in raw_states:
            if isinstance(s, (list, tuple)):
                flat.extend(float(v) for v in s)
            else:
                flat.append(float(s))
        if len(flat) != 2 * m:
            raise ScenarioError(f"initial.states: expected {2*m} values, got {len(flat)}")
        states = tuple(flat)
    arc_center = init_raw.get("arc_center", "random")
    if arc_center != "random":
        arc_center = _num(arc_center, "initial.arc_center")
    initial = InitialSpec(
        kind=init_kind,
        states=states,
        r_lo=_num(init_raw.get("r_lo", 0.5), "initial.r_lo"),
        r_hi=_num(init_raw.get("r_hi", 5.0), "initial.r_hi"),
        arc=_num(init_raw.get("arc", 0.9 * math.pi), "initial.arc"),
        arc_center=arc_center,
        radius=_num(init_raw.get("radius", 10.0), "initial.radius"),
    )
    if initial.kind == "annulus":
        if not 0 < initial.r_lo <= initial.r_hi:
            raise ScenarioError("initial: need 0 < r_lo <= r_hi")
        if not 0 < initial.arc <= 2 * math.pi:
            raise ScenarioError("initial.arc: must lie in (0, 2*pi]")

    integ_raw = doc.get("integrator", {})
    try:
        integrator = IntegratorConfig(
            h=_num(integ_raw.get("h", 0.01), "integrator.h"),
            samples_per_rotation=int(
                _num(integ_raw.get("samples_per_rotation", 50), "integrator.samples_per_rotation")
            ),
            record_stride=int(_num(integ_raw.get("record_stride", 10), "integrator.record_stride")),
            horizon=_num(integ_raw.get("horizon", 10.0), "integrator.horizon"),
        )
    except ValueError as exc:
        raise ScenarioError(f"integrator: {exc}") from exc

    exp_raw = doc.get("experiment", {})
    exp_kind = exp_raw.get("kind", "single-run")
    if exp_kind not in EXPERIMENT_KINDS:
        raise ScenarioError(f"experiment.kind: expected one of {EXPERIMENT_KINDS}, got {exp_kind!r}")
    system = exp_raw.get("system", "original")
    if system not in ("original", "rotating", "averaged"):
        raise ScenarioError("experiment.system: expected original | rotating | averaged")
    experiment = ExperimentSpec(
        kind=exp_kind,
        system=system,
        omegas=tuple(float(x) for x in exp_raw.get("omegas", [])),
        threshold=_num(exp_raw.get("threshold", 0.05), "experiment.threshold"),
        draws=int(_num(exp_raw.get("draws", 5), "experiment.draws")),
        delta=None if "delta" not in exp_raw else _num(exp_raw["delta"], "experiment.delta"),
        Delta=None if "Delta" not in exp_raw else _num(exp_raw["Delta"], "experiment.Delta"),
        with_deviation=bool(exp_raw.get("with_deviation", False)),
        requires_connectivity=(
            None
            if "requires_connectivity" not in exp_raw
            else bool(exp_raw["requires_connectivity"])
        ),
    )
    if exp_kind == "omega-sweep" and len(experiment.omegas) < 2:
        raise ScenarioError("experiment.omegas: omega sweeps need at least 2 values")

    out_raw = doc.get("output", {})
    output = OutputSpec(dir=str(out_raw.get("dir", "out")), prefix=out_raw.get("prefix"))

    seed = int(_num(doc.get("seed", 0), "seed"))
    return Scenario(
        name=str(name),
        network=network,
        initial=initial,
        integrator=integrator,
        experiment=experiment,
        output=output,
        seed=seed,
    )


def load_scenario(path) -> Scenario:
    """Parse a scenario file; raises ScenarioError with diagnostics."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" (line {mark.line + 1}, column {mark.column + 1})" if mark else ""
        raise ScenarioError(f"{path}: YAML parse error{where}: {exc}") from exc
    return parse_scenario(doc, source=str(path))


def _clean(value):
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items() if v is not None}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def scenario_to_dict(sc: Scenario) -> dict:
    """Plain-dict form of a scenario (inverse of :func:`parse_scenario`)."""
    doc = {
        "name": sc.name,
        "seed": sc.seed,
        "network": {
            "m": sc.network.m,
            "omega": sc.network.omega,
            "kind": sc.network.kind,
            "projection": sc.network.projection,
            "coupling": [_clean(asdict(e)) for e in sc.network.coupling],
        },
        "initial": _clean(asdict(sc.initial)),
        "integrator": {
            "h": sc.integrator.h,
            "samples_per_rotation": sc.integrator.samples_per_rotation,
            "record_stride": sc.integrator.record_stride,
            "horizon": sc.integrator.horizon,
        },
        "experiment": _clean(asdict(sc.experiment)),
        "output": _clean(asdict(sc.output)),
    }
    if sc.network.damping:
        doc["network"]["damping"] = dict(sc.network.damping)
    if sc.experiment.requires_connectivity is None:
        doc["experiment"].pop("requires_connectivity", None)
    return doc


def save_scenario(sc: Scenario, path) -> None:
    Path(path).write_text(yaml.safe_dump(scenario_to_dict(sc), sort_keys=False))


def build_network(spec: NetworkSpec) -> Network:
    """Instantiate the in-memory network a spec describes."""
    edges = []
    for e in spec.coupling:
        params = {}
        if e.gain is not None:
            params["gain"] = e.gain
        if e.cap is not None:
            params["cap"] = e.cap
        if e.table_s is not None:
            params["table_s"] = e.table_s
        if e.table_y is not None:
            params["table_y"] = e.table_y
        try:
            cf = make_coupling(e.kind, **params)
        except ValueError as exc:
            raise ScenarioError(f"coupling ({e.i}, {e.j}): {exc}") from exc
        edges.append((e.i - 1, e.j - 1, cf))
    ic = interconnection_from_edges(spec.m, edges)

    damping = None
    if spec.kind == "lienard":
        dkind = spec.damping.get("kind", "vdp")
        if dkind != "vdp":
            raise ScenarioError(f"network.damping.kind: unsupported kind {dkind!r}")
        try:
            damping = vdp_damping(float(spec.damping.get("epsilon", 1.0)))
        except ValueError as exc:
            raise ScenarioError(f"network.damping: {exc}") from exc
    return Network(
        m=spec.m,
        omega=spec.omega,
        interconnection=ic,
        damping=damping,
        projection=spec.projection,
    )


def sample_initial(spec: InitialSpec, m: int, rng: np.random.Generator) -> np.ndarray:
    """Draw one initial state (flat, length 2m) from the sampler a spec describes.

    annulus: one arc center per draw (sampled uniformly when arc_center is
    "random"), then per-oscillator radius uniform in [r_lo, r_hi] and angle
    uniform in the arc. anywhere: per-oscillator uniform over the disk of the
    configured radius. explicit: the stored states verbatim.
    """
    if spec.kind == "explicit":
        return np.asarray(spec.states, dtype=float).copy()
    out = np.empty(2 * m)
    if spec.kind == "annulus":
        center = (
            rng.uniform(0.0, 2.0 * math.pi)
            if spec.arc_center == "random"
            else float(spec.arc_center)
        )
        radii = rng.uniform(spec.r_lo, spec.r_hi, size=m)
        angles = center + rng.uniform(-0.5 * spec.arc, 0.5 * spec.arc, size=m)
    elif spec.kind == "anywhere":
        radii = spec.radius * np.sqrt(rng.uniform(0.0, 1.0, size=m))
        angles = rng.uniform(0.0, 2.0 * math.pi, size=m)
    else:
        raise ScenarioError(f"unknown initial kind {spec.kind!r}")
    out[0::2] = radii * np.cos(angles)
    out[1::2] = radii * np.sin(angles)
    return out

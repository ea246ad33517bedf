"""Experiment runner: executes a scenario, writes trajectory/sweep tables and
a summary document, and implements the frequency sweep and the empirical
frequency-threshold search.

Output contracts (stable across runs of the same tool version):
    trajectory CSV  header t, q1, p1, ..., qm, pm, dist_B, dist_R, dist_A,
                    cone_angle, V; one row per recorded sample; undefined
                    metrics are written as nan.
    sweep CSV       header omega, final_residual, max_deviation, settle_time,
                    diverged; residual is the distance to the synchronized
                    ring states for damped networks and to the
                    synchronization manifold for harmonic ones.
    evidence CSV    (threshold search) header omega, draw, final_residual,
                    tail_max_residual, settled, diverged.
    summary JSON    tool/version, scenario echo, rng identifier, experiment
                    results, emitted file names, status.
    tidy CSV        long format t, series, value (optional).

Exit status codes: 0 ok, 2 validation failure, 3 divergence, 4 parse error.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .averaging import AveragedModel, BracketError, build_averaged_model
from .coupling import graph_of, is_connected, validate_interconnection
from .dynamics import Network, validate_damping
from .geometry import in_open_semicircle
from .quadrature import DEFAULT_QUAD, QuadratureError
from .scenario import (
    RNG_ALGORITHM,
    Scenario,
    ScenarioError,
    build_network,
    draw_rng,
    load_scenario,
    sample_initial,
    scenario_to_dict,
)
from .simulate import Trajectory, compare_to_average, integrate

__all__ = [
    "EXIT_OK",
    "EXIT_VALIDATION",
    "EXIT_DIVERGENCE",
    "EXIT_PARSE",
    "SweepRecord",
    "OmegaStarResult",
    "RunResult",
    "validate_scenario",
    "run_scenario",
    "omega_sweep",
    "find_omega_star",
    "write_trajectory_csv",
    "write_tidy_csv",
]

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_DIVERGENCE = 3
EXIT_PARSE = 4

OMEGA_STAR_CAP = 2.0**16

TRAJ_METRICS = ("dist_B", "dist_R", "dist_A", "cone_angle", "V")


class PreconditionError(ValueError):
    """An experiment precondition on the scenario is not met."""


@dataclass
class SweepRecord:
    omega: float
    final_residual: float
    max_deviation: float | None
    settle_time: float
    diverged: bool


@dataclass
class OmegaStarResult:
    found: bool
    omega_star: float | None
    cap: float
    delta: float
    Delta: float
    evidence: list = field(default_factory=list)  # (omega, draw, final, tail_max, settled, diverged)


@dataclass
class RunResult:
    status: int
    files: dict
    summary: dict

    @property
    def ok(self) -> bool:
        return self.status == EXIT_OK


def _fmt(x) -> str:
    """Render one CSV cell; floats use shortest round-trip form."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if x is None:
        return "nan"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def write_trajectory_csv(path, traj: Trajectory) -> None:
    header = ["t"]
    for i in range(1, traj.m + 1):
        header += [f"q{i}", f"p{i}"]
    header += list(TRAJ_METRICS)
    rows = []
    for k, t in enumerate(traj.times):
        row = [t, *traj.states[k]]
        row += [traj.metrics[name][k] for name in TRAJ_METRICS]
        rows.append(row)
    _write_csv(Path(path), header, rows)


def write_tidy_csv(path, traj: Trajectory) -> None:
    """Long-format table (t, series, value) for plotting tools."""
    rows = []
    series = []
    for i in range(1, traj.m + 1):
        series += [f"q{i}", f"p{i}"]
    for k, t in enumerate(traj.times):
        for col, name in enumerate(series):
            rows.append([t, name, traj.states[k][col]])
        for name in TRAJ_METRICS:
            rows.append([t, name, traj.metrics[name][k]])
    _write_csv(Path(path), ["t", "series", "value"], rows)


def _write_summary(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2, allow_nan=True) + "\n")


def _json_safe(value):
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return [_json_safe(v) for v in value.tolist()]
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


def validate_scenario(sc: Scenario) -> tuple[Network | None, list[str]]:
    """Build and validate the scenario's network.

    Returns (network, problems); network is None when construction itself
    failed. Problems cover the coupling axioms, the damping assumptions, and
    (when the experiment needs it) graph connectivity.
    """
    problems: list[str] = []
    try:
        net = build_network(sc.network)
    except (ScenarioError, ValueError) as exc:
        return None, [str(exc)]

    report = validate_interconnection(net.interconnection)
    problems += [f"coupling {c.subject}: {c.name}" for c in report.failures()]
    if net.damping is not None:
        dreport = validate_damping(net.damping)
        problems += [f"damping {c.subject}: {c.name}" for c in dreport.failures()]
    if sc.connectivity_required() and not is_connected(graph_of(net.interconnection)):
        problems.append("interconnection graph is not connected")
    return net, problems


def _residual_metric(net: Network) -> str:
    return "dist_R" if net.damping is not None else "dist_A"


def _settle_time(times: np.ndarray, residual: np.ndarray, threshold: float) -> float:
    """Earliest recorded time from which the residual stays at or below the
    threshold; nan if it never settles."""
    below = residual <= threshold
    if not below[-1]:
        return math.nan
    k = len(below)
    while k > 0 and below[k - 1]:
        k -= 1
    return float(times[k])


def _sweep_point(args) -> SweepRecord:
    sc, omega, x0_list, model = args
    net = replace(build_network(sc.network), omega=float(omega))
    metric = _residual_metric(net)
    rho = model.rho if model is not None else None
    finals = []
    settles = []
    diverged = False
    max_dev = None
    for x0 in x0_list:
        traj = integrate("original", x0, sc.integrator, net=net, rho=rho)
        diverged = diverged or traj.diverged
        finals.append(traj.final_metric(metric))
        settles.append(_settle_time(traj.times, traj.metrics[metric], sc.experiment.threshold))
    if sc.experiment.with_deviation:
        devs = [
            compare_to_average(x0, net, sc.integrator, omega, model=model).max_deviation
            for x0 in x0_list
        ]
        max_dev = max(devs)
    return SweepRecord(
        omega=float(omega),
        final_residual=max(finals),
        max_deviation=max_dev,
        settle_time=max(settles),
        diverged=diverged,
    )


def omega_sweep(
    sc: Scenario,
    omegas,
    *,
    model: AveragedModel | None = None,
    workers: int = 1,
) -> list[SweepRecord]:
    """Run the scenario at each frequency with identical initial conditions.

    One record per point, sorted by frequency. Divergence at a point is
    recorded in its row; the sweep continues.
    """
    omegas = sorted(float(w) for w in omegas)
    if len(omegas) < 2:
        raise PreconditionError("omega sweeps need at least 2 frequencies")
    net = build_network(sc.network)
    if model is None and net.damping is not None:
        model = build_averaged_model(net, DEFAULT_QUAD)
    x0 = sample_initial(sc.initial, sc.network.m, draw_rng(sc.seed, 0))
    jobs = [(sc, w, [x0], model) for w in omegas]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_sweep_point, jobs))
    else:
        records = [_sweep_point(j) for j in jobs]
    return records


def _tail_hold(times: np.ndarray, residual: np.ndarray, delta: float) -> tuple[bool, float]:
    """Does the residual stay at or below delta over the final 20% of the
    horizon? Returns (settled, tail max)."""
    t_edge = times[-1] * 0.8
    tail = residual[times >= t_edge]
    tail_max = float(tail.max()) if tail.size else math.nan
    return bool(tail.size and tail_max <= delta), tail_max


def find_omega_star(
    sc: Scenario,
    Delta: float,
    delta: float,
    *,
    cap: float = OMEGA_STAR_CAP,
) -> OmegaStarResult:
    """Doubling search for a frequency past which all seeded runs settle.

    Candidates are powers of two from 1 up to ``cap``. For each candidate the
    scenario's sampler produces ``experiment.draws`` initial states confined
    to per-oscillator magnitude Delta/sqrt(m) (so the stacked state stays in
    the Delta-ball); a candidate is accepted when every run holds its
    residual at or below ``delta`` over the final 20% of the horizon. Hitting
    the cap yields a not-found result, not an exception.

    Raises:
        PreconditionError: delta <= 0, or (for damped networks) an initial
            sampler whose states may straddle the origin, violating the
            requirement of a compact convex start set away from 0.
    """
    if delta <= 0:
        raise PreconditionError("delta must be positive")
    if Delta <= 0:
        raise PreconditionError("Delta must be positive")
    net = build_network(sc.network)
    if net.damping is not None:
        init = sc.initial
        if init.kind == "explicit":
            pts = np.asarray(init.states).reshape(-1, 2)
            if not in_open_semicircle(pts):
                raise PreconditionError(
                    "explicit initial states do not avoid the origin direction-wise"
                )
        elif init.kind != "annulus" or init.arc >= math.pi:
            raise PreconditionError(
                "damped networks need an annulus sampler with arc < pi "
                "(a start set that excludes the origin)"
            )

    block_cap = Delta / math.sqrt(net.m)
    init = sc.initial
    if init.kind == "annulus":
        r_hi = min(init.r_hi, block_cap)
        if init.r_lo > r_hi:
            raise PreconditionError(
                f"annulus r_lo={init.r_lo} exceeds the per-oscillator cap {block_cap:.4g} "
                f"implied by Delta={Delta}"
            )
        init = replace(init, r_hi=r_hi)
    elif init.kind == "anywhere":
        init = replace(init, radius=min(init.radius, block_cap))

    model = build_averaged_model(net, DEFAULT_QUAD) if net.damping is not None else None
    rho = model.rho if model is not None else None
    metric = _residual_metric(net)

    draws = [
        sample_initial(init, net.m, draw_rng(sc.seed, d)) for d in range(sc.experiment.draws)
    ]
    for x0 in draws:
        if np.linalg.norm(x0) > Delta * (1.0 + 1e-12):
            raise PreconditionError(
                f"initial state norm {np.linalg.norm(x0):.4g} exceeds Delta={Delta}"
            )
    evidence = []
    omega = 1.0
    while omega <= cap:
        all_ok = True
        run_net = replace(net, omega=omega)
        for d, x0 in enumerate(draws):
            traj = integrate("original", x0, sc.integrator, net=run_net, rho=rho)
            settled, tail_max = _tail_hold(traj.times, traj.metrics[metric], delta)
            settled = settled and not traj.diverged
            evidence.append(
                (omega, d, traj.final_metric(metric), tail_max, settled, traj.diverged)
            )
            all_ok = all_ok and settled
        if all_ok:
            return OmegaStarResult(
                found=True, omega_star=omega, cap=cap, delta=delta, Delta=Delta,
                evidence=evidence,
            )
        omega *= 2.0
    return OmegaStarResult(
        found=False, omega_star=None, cap=cap, delta=delta, Delta=Delta, evidence=evidence
    )


def _base_summary(sc: Scenario, status: int) -> dict:
    return {
        "tool": {"name": "oscsync", "version": __version__},
        "scenario": scenario_to_dict(sc),
        "rng": {"algorithm": RNG_ALGORITHM, "seed": sc.seed},
        "experiment": sc.experiment.kind,
        "status": status,
        "results": {},
        "files": {},
    }


def run_scenario(
    scenario,
    *,
    out_dir=None,
    seed: int | None = None,
    tidy: bool = False,
    workers: int = 1,
) -> RunResult:
    """Execute a scenario end to end and write its output files.

    ``scenario`` is a path or a :class:`Scenario`. Returns a
    :class:`RunResult` whose status uses the documented exit codes; parse
    and validation problems are reported there rather than raised.
    """
    if not isinstance(scenario, Scenario):
        try:
            scenario = load_scenario(scenario)
        except ScenarioError as exc:
            return RunResult(
                status=EXIT_PARSE,
                files={},
                summary={"status": EXIT_PARSE, "error": str(exc)},
            )
    sc = scenario
    if seed is not None:
        sc = replace(sc, seed=int(seed))
    out = Path(out_dir if out_dir is not None else sc.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    prefix = sc.output.prefix or sc.name

    net, problems = validate_scenario(sc)
    summary = _base_summary(sc, EXIT_OK)
    files: dict[str, Path] = {}
    if problems:
        summary["status"] = EXIT_VALIDATION
        summary["results"]["validation_problems"] = problems
        path = out / f"{prefix}_summary.json"
        _write_summary(path, _json_safe(summary))
        return RunResult(status=EXIT_VALIDATION, files={"summary": path}, summary=summary)

    try:
        model = (
            build_averaged_model(net, DEFAULT_QUAD)
            if (net.damping is not None or sc.experiment.kind == "average-vs-original"
                or sc.experiment.system == "averaged")
            else None
        )
    except (BracketError, QuadratureError) as exc:
        summary["status"] = EXIT_VALIDATION
        summary["results"]["validation_problems"] = [f"averaged model: {exc}"]
        path = out / f"{prefix}_summary.json"
        _write_summary(path, _json_safe(summary))
        return RunResult(status=EXIT_VALIDATION, files={"summary": path}, summary=summary)
    if model is not None and model.rho is not None:
        summary["results"]["rho"] = model.rho

    status = EXIT_OK
    kind = sc.experiment.kind
    if kind == "single-run":
        x0 = sample_initial(sc.initial, sc.network.m, draw_rng(sc.seed, 0))
        traj = integrate(
            sc.experiment.system, x0, sc.integrator, net=net, model=model,
        )
        files["trajectory"] = out / f"{prefix}_trajectory.csv"
        write_trajectory_csv(files["trajectory"], traj)
        if tidy:
            files["tidy"] = out / f"{prefix}_tidy.csv"
            write_tidy_csv(files["tidy"], traj)
        summary["results"]["final"] = {
            name: traj.final_metric(name) for name in TRAJ_METRICS
        }
        summary["results"]["final_time"] = float(traj.times[-1])
        summary["results"]["diverged"] = traj.diverged
        if traj.diverged:
            status = EXIT_DIVERGENCE

    elif kind == "omega-sweep":
        records = omega_sweep(sc, sc.experiment.omegas, model=model, workers=workers)
        files["sweep"] = out / f"{prefix}_sweep.csv"
        _write_csv(
            files["sweep"],
            ["omega", "final_residual", "max_deviation", "settle_time", "diverged"],
            [
                [r.omega, r.final_residual, r.max_deviation, r.settle_time, r.diverged]
                for r in records
            ],
        )
        summary["results"]["residual_metric"] = _residual_metric(net)
        summary["results"]["sweep"] = [
            {
                "omega": r.omega,
                "final_residual": r.final_residual,
                "max_deviation": r.max_deviation,
                "settle_time": r.settle_time,
                "diverged": r.diverged,
            }
            for r in records
        ]

    elif kind == "average-vs-original":
        x0 = sample_initial(sc.initial, sc.network.m, draw_rng(sc.seed, 0))
        comp = compare_to_average(x0, net, sc.integrator, net.omega, model=model)
        files["trajectory"] = out / f"{prefix}_trajectory.csv"
        write_trajectory_csv(files["trajectory"], comp.rotating)
        files["averaged_trajectory"] = out / f"{prefix}_averaged_trajectory.csv"
        write_trajectory_csv(files["averaged_trajectory"], comp.averaged)
        if tidy:
            files["tidy"] = out / f"{prefix}_tidy.csv"
            write_tidy_csv(files["tidy"], comp.rotating)
        summary["results"]["max_deviation"] = comp.max_deviation
        summary["results"]["diverged"] = comp.diverged
        if comp.diverged:
            status = EXIT_DIVERGENCE

    else:  # omega-star-search
        default_Delta = (
            sc.initial.r_hi if sc.initial.kind == "annulus" else sc.initial.radius
        ) * math.sqrt(sc.network.m)
        try:
            result = find_omega_star(
                sc,
                Delta=sc.experiment.Delta if sc.experiment.Delta is not None else default_Delta,
                delta=sc.experiment.delta if sc.experiment.delta is not None else sc.experiment.threshold,
            )
        except PreconditionError as exc:
            summary["status"] = EXIT_VALIDATION
            summary["results"]["validation_problems"] = [str(exc)]
            path = out / f"{prefix}_summary.json"
            _write_summary(path, _json_safe(summary))
            return RunResult(status=EXIT_VALIDATION, files={"summary": path}, summary=summary)
        files["evidence"] = out / f"{prefix}_evidence.csv"
        _write_csv(
            files["evidence"],
            ["omega", "draw", "final_residual", "tail_max_residual", "settled", "diverged"],
            result.evidence,
        )
        summary["results"]["found"] = result.found
        summary["results"]["omega_star"] = result.omega_star
        summary["results"]["cap"] = result.cap

    summary["status"] = status
    summary["files"] = {k: p.name for k, p in files.items()}
    spath = out / f"{prefix}_summary.json"
    _write_summary(spath, _json_safe(summary))
    files["summary"] = spath
    return RunResult(status=status, files=files, summary=summary)

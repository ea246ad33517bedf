"""Fixed-step integration of the three system views (original, rotating
frame, averaged) with per-sample synchronization metrics.

Integration is classical RK4 with a frequency-aware step: systems that carry
the fast rotation (original and rotating-frame) refine the base step to at
least ``samples_per_rotation`` steps per rotation period. The step count is
rounded so the grid lands exactly on the horizon. Runs are deterministic
given identical inputs; a state entry exceeding the divergence threshold
truncates the trajectory and sets its flag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .averaging import AveragedModel, build_averaged_model, make_average_rhs
from .dynamics import Network, harmonic_rhs, lienard_rhs, transformed_rhs
from .geometry import dist_to_A, dist_to_B, dist_to_R, in_open_semicircle, lyapunov_V, smallest_cone, wedge_of
from .quadrature import DEFAULT_QUAD

__all__ = [
    "SYSTEMS",
    "IntegratorConfig",
    "Trajectory",
    "integrate",
    "compare_to_average",
    "AverageComparison",
    "invariance_probe",
    "InvarianceReport",
]

SYSTEMS = ("original", "rotating", "averaged")
DIVERGENCE_THRESHOLD = 1e12


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step RK4 settings.

    Attributes:
        h: base step.
        samples_per_rotation: minimum steps per rotation period 2*pi/omega
            for the frequency-carrying systems.
        record_stride: record every this-many steps (the final state is
            always recorded).
        horizon: integration time T (T = 0 records the initial state only).
        method: integration scheme; only "rk4" is supported.
    """

    h: float = 0.01
    samples_per_rotation: int = 50
    record_stride: int = 10
    horizon: float = 10.0
    method: str = "rk4"

    def __post_init__(self):
        if self.method != "rk4":
            raise ValueError("only the rk4 method is supported")
        if self.h <= 0:
            raise ValueError("h must be positive")
        if self.samples_per_rotation < 1:
            raise ValueError("samples_per_rotation must be >= 1")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")
        if self.horizon < 0:
            raise ValueError("horizon must be nonnegative")

    def effective_step(self, omega: float | None) -> float:
        """Base step capped by the rotation-resolving step when omega applies."""
        if omega is None:
            return self.h
        return min(self.h, 2.0 * math.pi / (omega * self.samples_per_rotation))


@dataclass
class Trajectory:
    """Recorded states of one integration plus per-sample metrics.

    ``metrics`` maps metric name to an array aligned with ``times``; metrics
    that need the synchronization magnitude are NaN when none is available
    (harmonic networks). ``cone_angle`` is NaN whenever the blocks do not fit
    in an open semicircle.
    """

    system: str
    times: np.ndarray
    states: np.ndarray
    m: int
    rho: float | None
    diverged: bool = False
    metrics: dict = field(default_factory=dict)

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def final_metric(self, name: str) -> float:
        return float(self.metrics[name][-1])


def _metric_rows(states: np.ndarray, rho: float | None) -> dict:
    n = states.shape[0]
    out = {
        "dist_B": np.full(n, math.nan),
        "dist_R": np.full(n, math.nan),
        "dist_A": np.empty(n),
        "cone_angle": np.full(n, math.nan),
        "V": np.full(n, math.nan),
    }
    for k, s in enumerate(states):
        blocks = s.reshape(-1, 2)
        out["dist_A"][k] = dist_to_A(s)
        if rho is not None:
            out["dist_B"][k] = dist_to_B(s, rho)
            out["dist_R"][k] = dist_to_R(s, rho)
            out["V"][k] = lyapunov_V(s, rho)
        if np.all(np.hypot(blocks[:, 0], blocks[:, 1]) > 0.0):
            cone = smallest_cone(blocks)
            if cone is not None:
                out["cone_angle"][k] = cone.angle
    return out


def _rhs_for(system: str, net: Network | None, model: AveragedModel | None) -> Callable:
    if system == "averaged":
        if model is None:
            raise ValueError("averaged integration needs a model")
        fast = make_average_rhs(model)
        return lambda t, y: fast(y)
    if net is None:
        raise ValueError(f"{system} integration needs a network")
    if system == "original":
        base = lienard_rhs if net.damping is not None else harmonic_rhs
        return lambda t, y: base(y, net)
    if system == "rotating":
        omega = net.omega
        return lambda t, y: transformed_rhs(y, omega * t, net)
    raise ValueError(f"unknown system {system!r}; expected one of {SYSTEMS}")


def integrate(
    system: str,
    x0,
    cfg: IntegratorConfig,
    *,
    net: Network | None = None,
    model: AveragedModel | None = None,
    rho: float | None = None,
) -> Trajectory:
    """Integrate one system view from ``x0`` over ``cfg.horizon``.

    ``system`` selects the right-hand side: "original" (full dynamics at
    frequency net.omega), "rotating" (rotating-frame dynamics, periodic in
    omega*t), or "averaged" (autonomous averaged dynamics from ``model``).
    The magnitude used by the set metrics comes from ``rho`` if given, else
    from ``model``.
    """
    rhs = _rhs_for(system, net, model)
    y = np.array(x0, dtype=float)
    m = y.size // 2
    if net is not None and y.size != 2 * net.m:
        raise ValueError(f"state must have length {2*net.m}")
    if not np.all(np.isfinite(y)):
        raise ValueError("initial state must be finite")
    if rho is None and model is not None:
        rho = model.rho

    omega = net.omega if (net is not None and system in ("original", "rotating")) else None
    h_eff = cfg.effective_step(omega)

    if cfg.horizon == 0.0:
        times = np.array([0.0])
        states = y[None, :].copy()
        traj = Trajectory(system=system, times=times, states=states, m=m, rho=rho)
        traj.metrics = _metric_rows(states, rho)
        return traj

    n_steps = max(1, math.ceil(cfg.horizon / h_eff - 1e-9))
    h = cfg.horizon / n_steps

    rec_times = [0.0]
    rec_states = [y.copy()]
    diverged = False
    t = 0.0
    for step in range(1, n_steps + 1):
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = step * h
        if step % cfg.record_stride == 0 or step == n_steps:
            if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > DIVERGENCE_THRESHOLD:
                diverged = True
                break
            rec_times.append(t)
            rec_states.append(y.copy())

    traj = Trajectory(
        system=system,
        times=np.array(rec_times),
        states=np.array(rec_states),
        m=m,
        rho=rho,
        diverged=diverged,
    )
    traj.metrics = _metric_rows(traj.states, rho)
    return traj


@dataclass
class AverageComparison:
    """Rotating-frame run vs averaged run from the same initial state."""

    omega: float
    times: np.ndarray
    deviation: np.ndarray
    max_deviation: float
    rotating: Trajectory
    averaged: Trajectory
    diverged: bool


def compare_to_average(
    x0,
    net: Network,
    cfg: IntegratorConfig,
    omega: float | None = None,
    *,
    model: AveragedModel | None = None,
) -> AverageComparison:
    """Integrate the rotating-frame system at ``omega`` and the averaged
    system from the same initial state, and measure their gap.

    Both runs share one step grid (the frequency-refined one), so deviations
    are exact samples of |x(t) - eta(t)| on common times.
    """
    if omega is None:
        omega = net.omega
    run_net = replace(net, omega=float(omega))
    if model is None:
        model = build_averaged_model(net, DEFAULT_QUAD)

    h_eff = cfg.effective_step(omega)
    common = replace(cfg, h=h_eff)
    rot = integrate("rotating", x0, common, net=run_net, model=model)
    avg = integrate("averaged", x0, common, model=model)

    n = min(rot.times.size, avg.times.size)
    dev = np.linalg.norm(rot.states[:n] - avg.states[:n], axis=1)
    return AverageComparison(
        omega=float(omega),
        times=rot.times[:n],
        deviation=dev,
        max_deviation=float(dev.max()),
        rotating=rot,
        averaged=avg,
        diverged=rot.diverged or avg.diverged,
    )


@dataclass
class InvarianceReport:
    """Sampled invariance checks along an averaged trajectory."""

    status: str  # "ok" or "precondition-failed"
    wedge_ok: bool = False
    max_wedge_violation: float = math.nan
    cone_ok: bool = False
    max_cone_increase: float = math.nan
    v_ok: bool = False
    max_v_increase: float = math.nan

    @property
    def passed(self) -> bool:
        return self.status == "ok" and self.wedge_ok and self.cone_ok and self.v_ok


def invariance_probe(traj: Trajectory, rho: float, tol: float = 1e-6) -> InvarianceReport:
    """Check the forward-invariance predictions along an averaged trajectory.

    Samplewise: (i) every block stays inside the wedge of the initial blocks
    (inflated by ``tol``), (ii) the enclosing-cone angle never increases by
    more than ``tol``, (iii) the Lyapunov value never increases by more than
    ``tol`` while positive. Requires the initial blocks to satisfy the
    open-semicircle condition; otherwise reports "precondition-failed"
    without running the checks.
    """
    if traj.system != "averaged":
        raise ValueError("invariance_probe expects an averaged-system trajectory")
    blocks0 = traj.states[0].reshape(-1, 2)
    if not in_open_semicircle(blocks0):
        return InvarianceReport(status="precondition-failed")
    wedge = wedge_of(blocks0, rho)

    worst_violation = -math.inf
    for s in traj.states:
        for blk in s.reshape(-1, 2):
            worst_violation = max(worst_violation, wedge.violation(blk))

    angles = traj.metrics["cone_angle"]
    finite = np.isfinite(angles)
    increases = np.diff(angles[finite]) if np.count_nonzero(finite) > 1 else np.array([0.0])
    max_cone_inc = float(np.max(increases, initial=0.0))

    v = np.array([lyapunov_V(s, rho) for s in traj.states])
    pos = v[:-1] > 0.0
    v_inc = np.diff(v)[pos] if np.any(pos) else np.array([0.0])
    max_v_inc = float(np.max(v_inc, initial=0.0))

    return InvarianceReport(
        status="ok",
        wedge_ok=worst_violation <= tol,
        max_wedge_violation=worst_violation,
        cone_ok=max_cone_inc <= tol,
        max_cone_increase=max_cone_inc,
        v_ok=max_v_inc <= tol,
        max_v_increase=max_v_inc,
    )

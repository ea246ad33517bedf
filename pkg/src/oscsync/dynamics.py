"""Right-hand sides for the coupled oscillator arrays and the rotating-frame
change of coordinates.

State layout is a flat vector of interleaved pairs [q1, p1, ..., qm, pm].
Two array families are supported: a Lienard-type array

    dq_i/dt = omega * p_i
    dp_i/dt = -omega * q_i - f(q_i) * p_i + sum_j gamma_ij(p_j - p_i)

and a harmonic array (same equations without the damping term). Coupling may
instead act through positions (the q components); the projection is a
network-level switch.

The rotating frame removes the fast rotation: with

    R(t) = [[cos(omega t), sin(omega t)], [-sin(omega t), cos(omega t)]]

the transform is x_i(t) = R(t)^T xi_i(t), i.e. each planar block is rotated
by -omega*t. In the rotated coordinates the dynamics become periodic in the
phase omega*t with the damping and coupling entering through the rotated
projections u(phase) = [cos, sin] and w(phase) = [-sin, cos].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Sequence

import numpy as np

from .coupling import Interconnection, ValidationReport
from .quadrature import DEFAULT_QUAD, QuadratureConfig, adaptive_simpson

__all__ = [
    "DampingSpec",
    "Network",
    "vdp_damping",
    "validate_damping",
    "blocks_of",
    "block_norms",
    "lienard_rhs",
    "harmonic_rhs",
    "rotating_frame",
    "inverse_rotating_frame",
    "transformed_rhs",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class DampingSpec:
    """Damping nonlinearity f with its antiderivative F (F(0) = 0).

    ``s0`` is the positive landmark where F first returns to zero: F is
    negative on (0, s0) and positive, nondecreasing and growing past it.
    Callables must accept numpy arrays.
    """

    f: Callable
    F: Callable
    s0: float
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.s0 <= 0:
            raise ValueError("s0 must be positive")


def _vdp_f(s, epsilon):
    if isinstance(s, float):
        return epsilon * (s * s - 1.0)
    a = np.asarray(s, dtype=float)
    out = epsilon * (a * a - 1.0)
    return float(out) if np.ndim(s) == 0 else out


def _vdp_F(s, epsilon):
    if isinstance(s, float):
        return epsilon * (s * s * s / 3.0 - s)
    a = np.asarray(s, dtype=float)
    out = epsilon * (a * a * a / 3.0 - a)
    return float(out) if np.ndim(s) == 0 else out


def vdp_damping(epsilon: float) -> DampingSpec:
    """Van der Pol damping: f(s) = epsilon*(s^2 - 1), F zero again at sqrt(3)."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return DampingSpec(
        f=partial(_vdp_f, epsilon=epsilon),
        F=partial(_vdp_F, epsilon=epsilon),
        s0=math.sqrt(3.0),
        name="vdp",
        params={"epsilon": float(epsilon)},
    )


def validate_damping(
    d: DampingSpec,
    grid: Sequence[float] | None = None,
    quad: QuadratureConfig = DEFAULT_QUAD,
) -> ValidationReport:
    """Check the damping assumptions on a finite grid.

    Evenness of f, the sign pattern of F around s0 (negative before,
    nonnegative and nondecreasing after, clearly positive at the far end),
    and consistency of F with the quadrature of f. Growth at infinity is
    untestable; the far end of the grid (default 10*s0) stands in for it.
    """
    report = ValidationReport()
    s_max = 10.0 * d.s0
    g = np.linspace(s_max / 200.0, s_max, 200) if grid is None else np.asarray(grid, float)
    if g.size == 0 or np.any(g <= 0):
        raise ValueError("grid must be positive and nonempty")
    g = np.sort(g)
    if g[-1] <= d.s0:
        raise ValueError("grid must extend beyond s0")

    f_even = np.allclose(np.asarray(d.f(-g)), np.asarray(d.f(g)), rtol=1e-10, atol=1e-12)
    report.add("f", "even function", bool(f_even))

    F_s0 = float(d.F(d.s0))
    scale = max(1.0, float(np.max(np.abs(np.asarray(d.F(g))))))
    report.add("F", "F(s0) = 0", abs(F_s0) <= 1e-9 * scale, f"F(s0) = {F_s0:.3e}")

    inner = g[g < d.s0 * (1.0 - 1e-12)]
    if inner.size:
        report.add("F", "negative on (0, s0)", bool(np.all(np.asarray(d.F(inner)) < 0)))
    outer = g[g > d.s0 * (1.0 + 1e-12)]
    if outer.size:
        Fo = np.asarray(d.F(outer))
        report.add("F", "nonnegative beyond s0", bool(np.all(Fo >= -1e-12 * scale)))
        report.add(
            "F", "nondecreasing beyond s0", bool(np.all(np.diff(Fo) >= -1e-12 * scale))
        )
        report.add("F", "positive at grid end", float(Fo[-1]) > 0, f"F({g[-1]:.3g}) = {Fo[-1]:.3g}")

    # F must be the antiderivative of f, not an unrelated map.
    for s in (0.5 * d.s0, d.s0, 0.5 * (d.s0 + g[-1])):
        integral, _ = adaptive_simpson(lambda t: float(d.f(t)), 0.0, float(s), quad)
        ok = abs(integral - float(d.F(s))) <= 1e-8 * max(1.0, abs(integral))
        report.add("F", f"matches integral of f at s={s:.3g}", ok)
    return report


@dataclass(frozen=True)
class Network:
    """An array of m identical planar oscillators and their couplings.

    ``damping is None`` selects the harmonic family. ``projection`` chooses
    which state component feeds the couplings: "velocity" (the p components,
    coupling enters the p equations) or "position" (the q components,
    coupling enters the q equations).
    """

    m: int
    omega: float
    interconnection: Interconnection
    damping: DampingSpec | None = None
    projection: str = "velocity"

    def __post_init__(self):
        if self.m != self.interconnection.m:
            raise ValueError("m must match the interconnection size")
        if self.omega <= 0:
            raise ValueError("omega must be positive")
        if self.projection not in ("velocity", "position"):
            raise ValueError("projection must be 'velocity' or 'position'")
        groups: dict[int, tuple] = {}
        order: list[int] = []
        for i, j in self.interconnection.edges():
            cf = self.interconnection.gamma[i][j]
            key = id(cf)
            if key not in groups:
                groups[key] = (cf, [], [])
                order.append(key)
            groups[key][1].append(i)
            groups[key][2].append(j)
        cache = [
            (groups[k][0], np.asarray(groups[k][1]), np.asarray(groups[k][2]))
            for k in order
        ]
        object.__setattr__(self, "_groups", cache)

    @property
    def kind(self) -> str:
        return "harmonic" if self.damping is None else "lienard"

    def edge_groups(self):
        """Edges grouped by shared coupling object: list of (gamma, src, dst)
        with src/dst index arrays. Entry (i, j) couples the projected state of
        oscillator j into oscillator i's equation."""
        return self._groups


def blocks_of(state: np.ndarray) -> np.ndarray:
    """View the flat state as an (m, 2) array of planar blocks."""
    state = np.asarray(state, dtype=float)
    if state.ndim != 1 or state.size % 2:
        raise ValueError("state must be a flat vector of (q, p) pairs")
    return state.reshape(-1, 2)


def block_norms(state: np.ndarray) -> np.ndarray:
    b = blocks_of(state)
    return np.hypot(b[:, 0], b[:, 1])


def _check_state(state: np.ndarray, m: int) -> np.ndarray:
    state = np.asarray(state, dtype=float)
    if state.shape != (2 * m,):
        raise ValueError(f"state must have length {2*m}, got shape {state.shape}")
    return state


def _coupling_sum(net: Network, proj: np.ndarray) -> np.ndarray:
    """sum_j gamma_ij(proj_j - proj_i) for each oscillator i."""
    out = np.zeros(net.m)
    for gamma, src, dst in net.edge_groups():
        vals = np.asarray(gamma(proj[dst] - proj[src]), dtype=float)
        np.add.at(out, src, vals)
    return out


def lienard_rhs(xi: np.ndarray, net: Network) -> np.ndarray:
    """Time derivative of the Lienard array at state ``xi``."""
    if net.damping is None:
        raise ValueError("lienard_rhs needs a network with damping")
    xi = _check_state(xi, net.m)
    q = xi[0::2]
    p = xi[1::2]
    dq = net.omega * p
    dp = -net.omega * q - np.asarray(net.damping.f(q)) * p
    if net.projection == "velocity":
        dp = dp + _coupling_sum(net, p)
    else:
        dq = dq + _coupling_sum(net, q)
    out = np.empty_like(xi)
    out[0::2] = dq
    out[1::2] = dp
    return out


def harmonic_rhs(xi: np.ndarray, net: Network) -> np.ndarray:
    """Time derivative of the harmonic array at state ``xi``."""
    if net.damping is not None:
        raise ValueError("harmonic_rhs expects a network without damping")
    xi = _check_state(xi, net.m)
    q = xi[0::2]
    p = xi[1::2]
    dq = net.omega * p
    dp = -net.omega * q
    if net.projection == "velocity":
        dp = dp + _coupling_sum(net, p)
    else:
        dq = dq + _coupling_sum(net, q)
    out = np.empty_like(xi)
    out[0::2] = dq
    out[1::2] = dp
    return out


def rotating_frame(xi: np.ndarray, t: float, omega: float) -> np.ndarray:
    """Rotate every planar block by -omega*t.

    Convention: the frame matrix is [[c, -s], [s, c]] with c = cos(omega*t),
    s = sin(omega*t), so a block (1, 0) at omega*t = pi/2 maps to (0, 1).
    The inverse (:func:`inverse_rotating_frame`) rotates by +omega*t; the
    round trip is the identity and all pairwise distances are preserved.
    """
    xi = np.asarray(xi, dtype=float)
    c = math.cos(omega * t)
    s = math.sin(omega * t)
    q = xi[0::2]
    p = xi[1::2]
    out = np.empty_like(xi)
    out[0::2] = c * q - s * p
    out[1::2] = s * q + c * p
    return out


def inverse_rotating_frame(x: np.ndarray, t: float, omega: float) -> np.ndarray:
    """Inverse of :func:`rotating_frame` (rotate every block by +omega*t)."""
    return rotating_frame(x, -t, omega)


def transformed_rhs(x: np.ndarray, phase: float, net: Network) -> np.ndarray:
    """Right-hand side of the rotating-frame array at rotation phase ``phase``.

    The field is 2*pi-periodic in ``phase``; the phase is reduced modulo
    2*pi before any trig evaluation.
    """
    x = _check_state(x, net.m)
    phase = math.fmod(phase, TWO_PI)
    c = math.cos(phase)
    s = math.sin(phase)
    q = x[0::2]
    p = x[1::2]
    u = c * q + s * p  # [cos, sin] . x_i
    w = -s * q + c * p  # [-sin, cos] . x_i

    amp = np.zeros(net.m)  # coefficient of the w-direction per oscillator
    amp_u = None
    if net.damping is not None:
        amp -= np.asarray(net.damping.f(u)) * w
    if net.projection == "velocity":
        amp += _coupling_sum(net, w)
    else:
        amp_u = _coupling_sum(net, u)

    out = np.empty_like(x)
    out[0::2] = -s * amp
    out[1::2] = c * amp
    if amp_u is not None:
        out[0::2] += c * amp_u
        out[1::2] += s * amp_u
    return out

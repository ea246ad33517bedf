"""Period-averaged dynamics of the rotating-frame array.

Both the damping and the coupling average to radial planar fields, so each is
fully described by a scalar radial profile:

    kappa(s) = (2/pi) * integral_0^s f(sigma) sqrt(1 - sigma^2/s^2) dsigma
    rho(s)   = (1/2pi) * integral_0^2pi gamma(s sin(phi)) sin(phi) dphi

The averaged damping field is kappa(|v|) v/|v| and the averaged coupling
field is rho(|v|) v/|v| (both extended by 0 at v = 0, where the profiles
vanish). kappa inherits the damping assumptions: it is negative on (0, rho*)
and positive and increasing past its unique positive root rho*, the magnitude
at which synchronized oscillations settle. The averaged array is

    deta_i/dt = -kappa-field(eta_i) + sum_j rho-field_ij(eta_j - eta_i)

with the first term absent for harmonic networks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .coupling import CouplingFunction
from .dynamics import DampingSpec, Network, _check_state
from .quadrature import DEFAULT_QUAD, QuadratureConfig, adaptive_simpson

__all__ = [
    "QuadratureConfig",
    "kappa",
    "rho_coupling",
    "f_bar",
    "gamma_bar",
    "find_rho",
    "BracketError",
    "AveragedModel",
    "build_averaged_model",
    "average_rhs",
    "make_average_rhs",
]

HALF_PI = 0.5 * math.pi
TWO_PI = 2.0 * math.pi


class BracketError(RuntimeError):
    """Root bracketing failed; the damping profile has no usable sign change."""


def kappa(d: DampingSpec, s: float, quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Radial profile of the period-averaged damping field at magnitude ``s``.

    Computed in the substituted form
    (2/pi) * integral_0^{pi/2} f(s sin(theta)) s cos(theta)^2 dtheta,
    which removes the square-root endpoint singularity of the raw integrand.
    """
    if s < 0:
        raise ValueError("s must be nonnegative")
    if s == 0.0:
        return 0.0
    f = d.f

    def integrand(theta: float) -> float:
        c = math.cos(theta)
        return float(f(s * math.sin(theta))) * s * c * c

    value, _ = adaptive_simpson(integrand, 0.0, HALF_PI, quad)
    return 2.0 / math.pi * value


def rho_coupling(
    gamma: CouplingFunction, s: float, quad: QuadratureConfig = DEFAULT_QUAD
) -> float:
    """Radial profile of the period-averaged coupling field at magnitude ``s``.

    Full-period average (1/2pi) * integral_0^{2pi} gamma(s sin phi) sin phi dphi.
    The integrand depends on phi only through sin(phi), so reflecting about
    pi/2 folds the period onto [-pi/2, pi/2]; the value computed is exactly
    the full-period average. Nonnegative by the sign axiom, and strictly
    positive for s > 0 whenever the coupling is nonzero.
    """
    if s < 0:
        raise ValueError("s must be nonnegative")
    if s == 0.0 or gamma.is_zero:
        return 0.0

    def integrand(phi: float) -> float:
        sp = math.sin(phi)
        return float(gamma(s * sp)) * sp

    value, _ = adaptive_simpson(integrand, -HALF_PI, HALF_PI, quad)
    return value / math.pi


def f_bar(d: DampingSpec, v, quad: QuadratureConfig = DEFAULT_QUAD) -> np.ndarray:
    """Averaged damping field: kappa(|v|) * v/|v|, with f_bar(0) = 0."""
    v = np.asarray(v, dtype=float)
    r = float(np.hypot(v[0], v[1]))
    if r == 0.0:
        return np.zeros(2)
    return kappa(d, r, quad) / r * v


def gamma_bar(
    gamma: CouplingFunction, v, quad: QuadratureConfig = DEFAULT_QUAD
) -> np.ndarray:
    """Averaged coupling field: rho(|v|) * v/|v|, with gamma_bar(0) = 0."""
    v = np.asarray(v, dtype=float)
    r = float(np.hypot(v[0], v[1]))
    if r == 0.0:
        return np.zeros(2)
    return rho_coupling(gamma, r, quad) / r * v


def find_rho(
    d: DampingSpec,
    quad: QuadratureConfig = DEFAULT_QUAD,
    *,
    bracket_cap: float | None = None,
    xtol: float = 1e-10,
    residual_tol: float = 1e-8,
) -> float:
    """Unique positive root of the kappa profile (the synchronization magnitude).

    Brackets the root by expanding upward from s0 until kappa turns positive
    (capped at 1e3*s0 by default), then bisects to ``xtol``.

    Raises:
        BracketError: no sign change found below the cap, or no negative
            value found below s0; the damping numerically violates its
            growth assumptions.
    """
    cap = 1e3 * d.s0 if bracket_cap is None else bracket_cap

    lo = 0.5 * d.s0
    k_lo = kappa(d, lo, quad)
    while k_lo >= 0.0:
        lo *= 0.5
        if lo < 1e-8 * d.s0:
            raise BracketError("kappa is not negative anywhere below s0")
        k_lo = kappa(d, lo, quad)

    hi = d.s0
    k_hi = kappa(d, hi, quad)
    while k_hi <= 0.0:
        hi *= 2.0
        if hi > cap:
            raise BracketError(
                f"kappa never became positive up to {cap:.3g}; "
                "the damping profile looks unbounded-growth-violating"
            )
        k_hi = kappa(d, hi, quad)

    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        k_mid = kappa(d, mid, quad)
        if k_mid == 0.0:
            lo = hi = mid
            break
        if k_mid < 0.0:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    residual = kappa(d, root, quad)
    if abs(residual) > residual_tol:
        raise BracketError(f"root residual {residual:.3e} exceeds {residual_tol:.1e}")
    return root


def _kappa_exact(s: float, d: DampingSpec, quad: QuadratureConfig) -> float:
    return kappa(d, s, quad)


def _rho_exact(s: float, gamma: CouplingFunction, quad: QuadratureConfig) -> float:
    return rho_coupling(gamma, s, quad)


class _RadialProfile:
    """Memoized radial profile: cubic spline on a log-spaced grid, with the
    exact quadrature as fallback outside the grid.

    Evaluation unrolls the piecewise-polynomial lookup (searchsorted plus a
    Horner step) because the averaged right-hand side calls it millions of
    times per integration.
    """

    def __init__(self, exact: Callable[[float], float], grid_min: float, grid_max: float,
                 points: int):
        s = np.concatenate(([0.0], np.geomspace(grid_min, grid_max, points - 1)))
        vals = np.array([0.0] + [exact(x) for x in s[1:]])
        spline = CubicSpline(s, vals)
        self._x = spline.x
        self._c = spline.c
        self._max = grid_max
        self._exact = exact

    def __call__(self, s):
        scalar = np.ndim(s) == 0
        a = np.atleast_1d(np.asarray(s, dtype=float))
        x = self._x
        idx = np.clip(np.searchsorted(x, a, side="right") - 1, 0, x.size - 2)
        dx = a - x[idx]
        c0, c1, c2, c3 = self._c[:, idx]
        out = ((c0 * dx + c1) * dx + c2) * dx + c3
        if a.max(initial=0.0) > self._max:
            high = a > self._max
            out[high] = [self._exact(float(v)) for v in a[high]]
        return float(out[0]) if scalar else out


class _ExactProfile:
    """Quadrature-backed profile (no interpolation)."""

    def __init__(self, exact: Callable[[float], float]):
        self._exact = exact

    def __call__(self, s):
        if np.ndim(s) == 0:
            return self._exact(float(s))
        return np.array([self._exact(float(x)) for x in np.asarray(s, dtype=float)])


def _zero_profile(s):
    return np.zeros_like(np.asarray(s, dtype=float)) if np.ndim(s) else 0.0


@dataclass
class AveragedModel:
    """Averaged dynamics of a network: profile evaluators plus the
    synchronization magnitude ``rho`` (None for harmonic networks).

    Immutable after construction; evaluators are pure and safe to share.
    """

    source: Network
    rho: float | None
    kappa: Callable | None
    _profiles: list  # aligned with _edge_groups
    _edge_groups: list  # (gamma, src index array, dst index array)
    _edge_to_group: dict  # (i, j) -> index into _profiles

    def rho_profile(self, i: int, j: int) -> Callable:
        """Radial profile evaluator for the (i, j) coupling (0-based)."""
        idx = self._edge_to_group.get((i, j))
        return _zero_profile if idx is None else self._profiles[idx]


def build_averaged_model(
    net: Network,
    quad: QuadratureConfig = DEFAULT_QUAD,
    *,
    memoize: bool = True,
    grid_points: int = 2048,
    grid_max: float | None = None,
) -> AveragedModel:
    """Construct the averaged model of ``net``.

    With ``memoize`` (the default) each radial profile is tabulated once on a
    log-spaced grid of ``grid_points`` values and evaluated through a cubic
    spline; pass ``memoize=False`` to evaluate the exact quadrature on every
    call. The grid covers [0, grid_max] with exact fallback above; the
    default span is 64 times the damping landmark s0 (or 64 for harmonic
    networks).
    """
    s_ref = net.damping.s0 if net.damping is not None else 1.0
    gmax = 64.0 * s_ref if grid_max is None else grid_max
    gmin = 1e-4 * s_ref

    rho_star = None
    kappa_eval = None
    if net.damping is not None:
        rho_star = find_rho(net.damping, quad)
        exact_k = partial(_kappa_exact, d=net.damping, quad=quad)
        kappa_eval = (
            _RadialProfile(exact_k, gmin, gmax, grid_points) if memoize else _ExactProfile(exact_k)
        )

    groups = net.edge_groups()
    profiles = []
    edge_to_group: dict[tuple[int, int], int] = {}
    for gidx, (gamma, src, dst) in enumerate(groups):
        exact_r = partial(_rho_exact, gamma=gamma, quad=quad)
        profiles.append(
            _RadialProfile(exact_r, gmin, gmax, grid_points) if memoize else _ExactProfile(exact_r)
        )
        for i, j in zip(src, dst):
            edge_to_group[(int(i), int(j))] = gidx
    return AveragedModel(
        source=net,
        rho=rho_star,
        kappa=kappa_eval,
        _profiles=profiles,
        _edge_groups=groups,
        _edge_to_group=edge_to_group,
    )


def make_average_rhs(model: AveragedModel) -> Callable:
    """Closure evaluating the averaged right-hand side without per-call
    validation; the integrator's hot loop uses this."""
    m = model.source.m
    kappa_eval = model.kappa
    groups = [
        (src, dst, profile)
        for (gamma, src, dst), profile in zip(model._edge_groups, model._profiles)
    ]

    def rhs(eta: np.ndarray) -> np.ndarray:
        # Profiles vanish at 0, so dividing by a floored norm is exact there.
        b = eta.reshape(m, 2)
        out = np.zeros_like(b)
        if kappa_eval is not None:
            r = np.hypot(b[:, 0], b[:, 1])
            scale = kappa_eval(r) / np.maximum(r, 1e-300)
            out -= scale[:, None] * b
        for src, dst, profile in groups:
            d = b[dst] - b[src]
            dist = np.hypot(d[:, 0], d[:, 1])
            scale = profile(dist) / np.maximum(dist, 1e-300)
            contrib = scale[:, None] * d
            out[:, 0] += np.bincount(src, weights=contrib[:, 0], minlength=m)
            out[:, 1] += np.bincount(src, weights=contrib[:, 1], minlength=m)
        return out.reshape(-1)

    return rhs


def average_rhs(eta: np.ndarray, model: AveragedModel) -> np.ndarray:
    """Time derivative of the averaged array at state ``eta``.

    Lienard networks: -kappa-field per oscillator plus the coupling fields;
    harmonic networks: the coupling sum alone.
    """
    eta = _check_state(eta, model.source.m)
    return make_average_rhs(model)(eta)

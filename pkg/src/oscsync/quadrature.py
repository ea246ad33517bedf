"""Adaptive Simpson quadrature for the period-averaging integrals.

Small, dependency-free integrator tuned for the smooth 1-D integrands this
package produces (trig-substituted radial profiles). Tolerances are relative
to the integral of the absolute integrand, so profiles that cross zero do not
trigger runaway refinement.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

__all__ = ["QuadratureConfig", "QuadratureError", "adaptive_simpson"]


@dataclass(frozen=True)
class QuadratureConfig:
    """Settings for :func:`adaptive_simpson`.

    Attributes:
        nodes: number of uniform panels in the initial subdivision (>= 2).
        rel_tol: relative tolerance, measured against the integral of the
            absolute integrand.
        max_depth: maximum recursive bisection depth per initial panel.
    """

    nodes: int = 8
    rel_tol: float = 1e-10
    max_depth: int = 40

    def __post_init__(self):
        if self.nodes < 2:
            raise ValueError("nodes must be >= 2")
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")


DEFAULT_QUAD = QuadratureConfig()


class QuadratureError(RuntimeError):
    """Raised when refinement exhausts its depth budget before converging.

    Carries the best value found and the achieved error estimate so callers
    can report how far off the result is.
    """

    def __init__(self, message: str, value: float, error_estimate: float):
        super().__init__(f"{message} (value={value:.6e}, error~{error_estimate:.3e})")
        self.value = value
        self.error_estimate = error_estimate


def _simpson(fa: float, fm: float, fb: float, width: float) -> float:
    return width / 6.0 * (fa + 4.0 * fm + fb)


def _refine(
    f: Callable[[float], float],
    a: float,
    b: float,
    fa: float,
    fm: float,
    fb: float,
    whole: float,
    tol: float,
    depth: int,
) -> tuple[float, float]:
    """Recursive bisection step. Returns (value, achieved error estimate)."""
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    left = _simpson(fa, flm, fm, m - a)
    right = _simpson(fm, frm, fb, b - m)
    err = (left + right - whole) / 15.0
    if abs(err) <= tol or depth <= 0:
        return left + right + err, abs(err)
    lv, le = _refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
    rv, re = _refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    return lv + rv, le + re


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    config: QuadratureConfig = DEFAULT_QUAD,
) -> tuple[float, float]:
    """Integrate ``f`` over ``[a, b]``.

    Returns:
        Tuple ``(value, error_estimate)``.

    Raises:
        QuadratureError: if the achieved error estimate exceeds the relative
            tolerance after ``max_depth`` levels of subdivision.
    """
    if a == b:
        return 0.0, 0.0
    if b < a:
        value, err = adaptive_simpson(f, b, a, config)
        return -value, err

    n = config.nodes
    width = (b - a) / n
    xs = [a + i * width for i in range(n + 1)]
    mids = [x + 0.5 * width for x in xs[:-1]]
    fxs = [f(x) for x in xs]
    fmids = [f(x) for x in mids]

    # Scale the tolerance by the absolute-integrand mass so sign changes in
    # the integrand do not demand unattainable relative accuracy.
    abs_mass = sum(
        _simpson(abs(fxs[i]), abs(fmids[i]), abs(fxs[i + 1]), width) for i in range(n)
    )
    tol_total = max(config.rel_tol * abs_mass, 1e-16)

    total = 0.0
    achieved = 0.0
    for i in range(n):
        whole = _simpson(fxs[i], fmids[i], fxs[i + 1], width)
        value, err = _refine(
            f,
            xs[i],
            xs[i + 1],
            fxs[i],
            fmids[i],
            fxs[i + 1],
            whole,
            tol_total / n,
            config.max_depth,
        )
        total += value
        achieved += err

    if achieved > 10.0 * tol_total:
        raise QuadratureError("quadrature did not converge", total, achieved)
    return total, achieved

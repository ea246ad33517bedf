"""Planar cones, wedges, and the target-set distances used by the
synchronization diagnostics.

Three subsets of the 2m-dimensional state space matter downstream:

    B: every planar block has magnitude at most rho (product of disks),
    R: all blocks equal and of magnitude exactly rho (synchronized ring states),
    A: all blocks equal (the synchronization manifold, any magnitude).

Cone and wedge constructions operate on the blocks as plane points. A cone is
the convex hull of two half-lines through the origin with opening strictly
below pi; a wedge additionally clips it between two radii and takes the
convex hull, giving a compact convex set that excludes the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Cone",
    "Wedge",
    "smallest_cone",
    "in_open_semicircle",
    "wedge_of",
    "dist_to_B",
    "dist_to_R",
    "dist_to_A",
    "lyapunov_V",
]

TWO_PI = 2.0 * math.pi

# Angular spans within this slack of pi are treated as "not strictly inside
# an open semicircle"; exact-semicircle configurations are measure zero.
SPAN_SLACK = 1e-12


def _wrap_angle(a: float) -> float:
    """Wrap to [0, 2*pi)."""
    a = math.fmod(a, TWO_PI)
    return a + TWO_PI if a < 0 else a


def _angdist(a: float, b: float) -> float:
    """Absolute angular distance in [0, pi]."""
    d = abs(math.fmod(a - b, TWO_PI))
    return min(d, TWO_PI - d)


@dataclass(frozen=True)
class Cone:
    """Convex hull of two half-lines; opening angle = 2 * half_aperture < pi."""

    bisector: float
    half_aperture: float

    def __post_init__(self):
        if not 0.0 <= self.half_aperture < math.pi / 2:
            raise ValueError("half_aperture must lie in [0, pi/2)")

    @property
    def angle(self) -> float:
        return 2.0 * self.half_aperture

    def contains(self, point, tol: float = 0.0) -> bool:
        p = np.asarray(point, dtype=float)
        r = math.hypot(p[0], p[1])
        if r == 0.0:
            return True  # the hull of half-lines includes the origin
        return _angdist(math.atan2(p[1], p[0]), self.bisector) <= self.half_aperture + tol


@dataclass(frozen=True)
class Wedge:
    """Convex hull of a cone clipped to the annulus r1 <= |x| <= r2.

    Equivalent description used for membership: inside the cone, |x| <= r2,
    and x . bisector_direction >= r1 * cos(half_aperture) (the chord that
    replaces the concave inner arc).
    """

    cone: Cone
    r1: float
    r2: float

    def __post_init__(self):
        if not 0.0 < self.r1 <= self.r2:
            raise ValueError("need 0 < r1 <= r2")

    def violation(self, point) -> float:
        """Signed distance-like violation measure; <= 0 means inside.

        Maximum of the three constraint excesses (radius beyond r2, chord
        shortfall, angular excess scaled by |x| to make it a length).
        """
        p = np.asarray(point, dtype=float)
        r = math.hypot(p[0], p[1])
        c = self.cone
        radial = r - self.r2
        chord = self.r1 * math.cos(c.half_aperture) - (
            p[0] * math.cos(c.bisector) + p[1] * math.sin(c.bisector)
        )
        if r == 0.0:
            return max(radial, chord)
        ang = (_angdist(math.atan2(p[1], p[0]), c.bisector) - c.half_aperture) * r
        return max(radial, chord, ang)

    def contains(self, point, tol: float = 0.0) -> bool:
        return self.violation(point) <= tol


def _angles(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    norms = np.hypot(pts[:, 0], pts[:, 1])
    if np.any(norms == 0.0):
        raise ValueError("direction undefined for a zero point")
    return np.arctan2(pts[:, 1], pts[:, 0])


def _min_enclosing_arc(angles: np.ndarray) -> tuple[float, float]:
    """(span, bisector) of the smallest circular arc containing all angles.

    Span is 2*pi minus the largest gap between circularly sorted angles. Ties
    on the largest gap break toward the smallest bisector angle.
    """
    a = np.sort(np.mod(angles, TWO_PI))
    gaps = np.diff(np.concatenate((a, [a[0] + TWO_PI])))
    largest = float(np.max(gaps))
    span = TWO_PI - largest
    best = None
    for idx in np.nonzero(gaps >= largest - 0.0)[0]:
        start = a[(idx + 1) % a.size]  # arc begins after the gap
        bis = _wrap_angle(start + 0.5 * span)
        if best is None or bis < best:
            best = bis
    return span, best


def smallest_cone(points) -> Cone | None:
    """Smallest cone containing all (nonzero) plane points.

    Returns None when no cone with opening below pi exists, i.e. when the
    angular span of the points reaches pi (equivalently, their convex hull
    meets the origin).

    Raises:
        ValueError: if any point is exactly zero.
    """
    angles = _angles(points)
    span, bisector = _min_enclosing_arc(angles)
    if span >= math.pi - SPAN_SLACK:
        return None
    return Cone(bisector=bisector, half_aperture=0.5 * span)


def in_open_semicircle(points) -> bool:
    """True iff all points are nonzero and span less than a half turn.

    Equivalent to the convex hull of the points not containing the origin.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if np.any(np.hypot(pts[:, 0], pts[:, 1]) == 0.0):
        return False
    span, _ = _min_enclosing_arc(np.arctan2(pts[:, 1], pts[:, 0]))
    return span < math.pi - SPAN_SLACK


def wedge_of(points, rho: float) -> Wedge | None:
    """Smallest wedge around ``rho`` containing the points.

    The cone is the smallest enclosing cone; the radii stretch just far
    enough to cover both the points and the rho-ring arc inside the cone.
    Returns None when the cone construction fails.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    cone = smallest_cone(points)
    if cone is None:
        return None
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    norms = np.hypot(pts[:, 0], pts[:, 1])
    return Wedge(cone=cone, r1=min(float(norms.min()), rho), r2=max(float(norms.max()), rho))


def _blocks(eta) -> np.ndarray:
    eta = np.asarray(eta, dtype=float)
    return eta.reshape(-1, 2)


def dist_to_B(eta, rho: float) -> float:
    """Euclidean distance from the stacked state to the product of rho-disks."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    norms = np.hypot(*_blocks(eta).T)
    excess = np.maximum(0.0, norms - rho)
    return float(np.sqrt(np.sum(excess * excess)))


def dist_to_R(eta, rho: float) -> float:
    """Distance to the synchronized ring states (all blocks equal, magnitude rho).

    Closed form: the optimal common direction is the normalized block sum;
    when the block sum vanishes every direction attains the same value.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    b = _blocks(eta)
    m = b.shape[0]
    total = b.sum(axis=0)
    sq = float(np.sum(b * b))
    return math.sqrt(max(0.0, sq - 2.0 * rho * math.hypot(total[0], total[1]) + m * rho * rho))


def dist_to_A(x) -> float:
    """Distance to the synchronization manifold (all blocks equal).

    The orthogonal projection replaces every block by the block mean.
    """
    b = _blocks(x)
    centered = b - b.mean(axis=0)
    return float(np.sqrt(np.sum(centered * centered)))


def lyapunov_V(eta, rho: float) -> float:
    """Decay certificate for attraction to B: half the worst squared-magnitude
    excess over rho^2, clipped at zero."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    norms_sq = np.sum(_blocks(eta) ** 2, axis=1)
    return 0.5 * max(0.0, float(np.max(norms_sq)) - rho * rho)

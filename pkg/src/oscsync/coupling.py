"""Nonlinear pairwise couplings, their sign/nondegeneracy axioms, and the
directed interaction graph they induce.

A coupling is a scalar map gamma with gamma(0) = 0 whose graph lies in the
first and third quadrants (s * gamma(s) >= 0). An interconnection is an
m x m matrix of such couplings with a zero diagonal; entry (i, j) feeds
oscillator j's projected state into oscillator i's dynamics. The induced
directed graph has an edge (i, j) exactly when gamma[i][j] is not the zero
coupling, and the array-level results downstream require that some node is
reachable from every other node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "COUPLING_KINDS",
    "CouplingFunction",
    "Interconnection",
    "DirectedGraph",
    "ValidationCheck",
    "ValidationReport",
    "make_coupling",
    "interconnection_from_edges",
    "validate_interconnection",
    "graph_of",
    "is_connected",
    "default_grid",
]

COUPLING_KINDS = ("zero", "linear", "cubic", "saturating", "custom")


@dataclass(frozen=True)
class CouplingFunction:
    """Scalar coupling nonlinearity.

    Built-in kinds:
        zero        gamma(s) = 0
        linear      gamma(s) = gain * s
        cubic       gamma(s) = gain * s**3
        saturating  gamma(s) = cap * tanh(gain * s / cap), slope ``gain`` at 0
        custom      odd-symmetric lookup table, linear interpolation inside
                    the table and boundary-slope extrapolation outside

    Instances are immutable and safe to share; ``__call__`` accepts scalars
    or numpy arrays.
    """

    kind: str
    gain: float = 1.0
    cap: float = 1.0
    table_s: tuple[float, ...] = field(default=())
    table_y: tuple[float, ...] = field(default=())

    def __call__(self, s):
        if isinstance(s, float):  # fast scalar path for quadrature loops
            if self.kind == "zero":
                return 0.0
            if self.kind == "linear":
                return self.gain * s
            if self.kind == "cubic":
                return self.gain * s * s * s
            if self.kind == "saturating":
                return self.cap * math.tanh(self.gain * s / self.cap)
            return self._eval_table(s)
        if self.kind == "zero":
            return np.zeros_like(np.asarray(s, dtype=float)) if np.ndim(s) else 0.0
        if self.kind == "linear":
            return self.gain * np.asarray(s, dtype=float) if np.ndim(s) else self.gain * s
        if self.kind == "cubic":
            if np.ndim(s):
                a = np.asarray(s, dtype=float)
                return self.gain * a * a * a
            return self.gain * s * s * s
        if self.kind == "saturating":
            return self.cap * np.tanh(self.gain * np.asarray(s, dtype=float) / self.cap)
        return self._eval_table(s)

    def _eval_table(self, s):
        xs = np.asarray(self.table_s)
        ys = np.asarray(self.table_y)
        a = np.asarray(s, dtype=float)
        out = np.interp(a, xs, ys)
        # Extrapolate with the slope of the boundary segment so the map stays
        # locally Lipschitz outside the table.
        lo_slope = (ys[1] - ys[0]) / (xs[1] - xs[0])
        hi_slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
        out = np.where(a < xs[0], ys[0] + lo_slope * (a - xs[0]), out)
        out = np.where(a > xs[-1], ys[-1] + hi_slope * (a - xs[-1]), out)
        return float(out) if np.ndim(s) == 0 else out

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero"


ZERO_COUPLING = CouplingFunction(kind="zero")


def make_coupling(spec, **params) -> CouplingFunction:
    """Build a :class:`CouplingFunction` from a kind name or a dict spec.

    Examples:
        make_coupling("linear", gain=2.0)
        make_coupling({"kind": "saturating", "gain": 1.0, "cap": 0.5})
        make_coupling("custom", table_s=[-1, 0, 1], table_y=[-2, 0, 2])

    Raises:
        ValueError: unknown kind, non-positive gain/cap, or a custom table
            that is not odd-symmetric (or violates the sign axiom at its
            own nodes).
    """
    if isinstance(spec, dict):
        params = {**spec, **params}
        kind = params.pop("kind")
    else:
        kind = spec
    if kind not in COUPLING_KINDS:
        raise ValueError(f"unknown coupling kind {kind!r}; expected one of {COUPLING_KINDS}")

    if kind == "zero":
        return ZERO_COUPLING

    if kind == "custom":
        xs = np.asarray(params.get("table_s", ()), dtype=float)
        ys = np.asarray(params.get("table_y", ()), dtype=float)
        if xs.size < 3 or xs.size != ys.size:
            raise ValueError("custom coupling needs matching table_s/table_y with >= 3 points")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("custom table_s must be strictly increasing")
        scale = max(np.max(np.abs(xs)), np.max(np.abs(ys)), 1.0)
        if not (
            np.allclose(xs, -xs[::-1], atol=1e-12 * scale)
            and np.allclose(ys, -ys[::-1], atol=1e-12 * scale)
        ):
            raise ValueError("custom table must be odd-symmetric about 0")
        if np.any(xs * ys < 0):
            raise ValueError("custom table violates the sign axiom s*gamma(s) >= 0")
        return CouplingFunction(kind="custom", table_s=tuple(xs), table_y=tuple(ys))

    gain = float(params.get("gain", 1.0))
    if gain <= 0:
        raise ValueError("gain must be positive")
    if kind == "saturating":
        cap = float(params.get("cap", 1.0))
        if cap <= 0:
            raise ValueError("cap must be positive")
        return CouplingFunction(kind="saturating", gain=gain, cap=cap)
    return CouplingFunction(kind=kind, gain=gain)


@dataclass(frozen=True)
class Interconnection:
    """m x m matrix of couplings with a zero diagonal."""

    m: int
    gamma: tuple[tuple[CouplingFunction, ...], ...]

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("need at least one oscillator")
        if len(self.gamma) != self.m or any(len(row) != self.m for row in self.gamma):
            raise ValueError("gamma must be an m x m matrix")
        for i in range(self.m):
            if not self.gamma[i][i].is_zero:
                raise ValueError(f"gamma[{i}][{i}] must be the zero coupling")

    def edges(self) -> list[tuple[int, int]]:
        """Ordered pairs (i, j) with a nonzero coupling, 0-based."""
        return [
            (i, j)
            for i in range(self.m)
            for j in range(self.m)
            if i != j and not self.gamma[i][j].is_zero
        ]


def interconnection_from_edges(
    m: int, edges: Iterable[tuple[int, int, CouplingFunction]]
) -> Interconnection:
    """Assemble an interconnection from sparse (i, j, coupling) triples, 0-based."""
    grid = [[ZERO_COUPLING] * m for _ in range(m)]
    for i, j, cf in edges:
        if not (0 <= i < m and 0 <= j < m):
            raise ValueError(f"edge ({i}, {j}) out of range for m={m}")
        if i == j:
            raise ValueError("self-couplings are not allowed")
        grid[i][j] = cf
    return Interconnection(m=m, gamma=tuple(tuple(row) for row in grid))


@dataclass(frozen=True)
class DirectedGraph:
    m: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        for i, j in self.edges:
            if i == j:
                raise ValueError("self-loops are not allowed")
            if not (0 <= i < self.m and 0 <= j < self.m):
                raise ValueError(f"edge ({i}, {j}) references an invalid node")


def graph_of(ic: Interconnection) -> DirectedGraph:
    """Directed graph with edge (i, j) iff gamma[i][j] is nonzero."""
    return DirectedGraph(m=ic.m, edges=tuple(ic.edges()))


def is_connected(g: DirectedGraph) -> bool:
    """True iff some node is reachable by directed paths from every other node."""
    if g.m == 1:
        return True
    preds: list[list[int]] = [[] for _ in range(g.m)]
    for i, j in g.edges:
        preds[j].append(i)  # i -> j, so i reaches j in one hop
    for root in range(g.m):
        # Walk edges backwards from the candidate root; if everything is
        # visited, every node has a path to the root.
        seen = [False] * g.m
        seen[root] = True
        stack = [root]
        count = 1
        while stack:
            node = stack.pop()
            for p in preds[node]:
                if not seen[p]:
                    seen[p] = True
                    count += 1
                    stack.append(p)
        if count == g.m:
            return True
    return False


@dataclass
class ValidationCheck:
    subject: str
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ValidationReport:
    """Outcome of an axiom/assumption validation run."""

    checks: list[ValidationCheck] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, subject: str, name: str, passed: bool, detail: str = ""):
        self.checks.append(ValidationCheck(subject, name, passed, detail))

    def failures(self) -> list[ValidationCheck]:
        return [c for c in self.checks if not c.passed]

    def summary(self) -> str:
        lines = []
        for c in self.checks:
            status = "ok" if c.passed else "FAIL"
            detail = f" ({c.detail})" if c.detail else ""
            lines.append(f"{status:4s} {c.subject}: {c.name}{detail}")
        for w in self.warnings:
            lines.append(f"warn {w}")
        return "\n".join(lines)


def default_grid() -> np.ndarray:
    """Default validation grid: 201 points, uniform on [-10, 10]."""
    return np.linspace(-10.0, 10.0, 201)


def _check_monotone_magnitude(cf: CouplingFunction, pos: np.ndarray) -> bool:
    vals = np.abs(np.asarray(cf(pos)))
    return bool(np.all(np.diff(vals) >= -1e-12 * max(1.0, float(vals.max(initial=0.0)))))


def validate_interconnection(
    ic: Interconnection, grid: Sequence[float] | None = None
) -> ValidationReport:
    """Check every nonzero entry against the coupling axioms on a sample grid.

    Per entry: the sign condition (gamma(0) = 0 and s*gamma(s) >= 0), the
    nondegeneracy surrogate (gamma(s) != 0 for sampled s != 0), and bounded
    finite-difference quotients (local Lipschitz surrogate). Non-monotone
    magnitude profiles of custom tables are flagged as warnings, not failures.
    """
    g = default_grid() if grid is None else np.asarray(grid, dtype=float)
    if g.size == 0:
        raise ValueError("grid must be nonempty")
    scale = max(1.0, float(np.max(np.abs(g))))
    gs = np.sort(g)
    if not np.allclose(gs, -gs[::-1], atol=1e-9 * scale):
        raise ValueError("grid must be symmetric about 0")

    report = ValidationReport()
    pos = gs[gs > 0]
    nonzero = gs[gs != 0]
    for i in range(ic.m):
        for j in range(ic.m):
            if i == j:
                continue
            cf = ic.gamma[i][j]
            if cf.is_zero:
                continue
            subject = f"gamma[{i+1}][{j+1}]"
            vals = np.asarray(cf(gs))
            at0 = float(cf(0.0))
            sign_ok = at0 == 0.0 and bool(np.all(gs * vals >= -1e-300))
            report.add(subject, "sign condition (quadrants I/III)", sign_ok)
            nonvanish = bool(np.all(np.asarray(cf(nonzero)) != 0.0))
            report.add(subject, "nonvanishing off zero", nonvanish)
            quotients = np.diff(vals) / np.diff(gs)
            lip_ok = bool(np.all(np.isfinite(quotients)))
            report.add(
                subject,
                "finite difference quotients bounded",
                lip_ok,
                f"max |dgamma/ds| = {np.max(np.abs(quotients)):.4g}" if lip_ok else "non-finite",
            )
            if cf.kind == "custom" and not _check_monotone_magnitude(cf, pos):
                report.warnings.append(
                    f"{subject}: |gamma| is not nondecreasing in |s| on the grid"
                )
    return report

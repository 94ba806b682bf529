"""Encircling an EP: eigenvalue permutation and eigenvector holonomy.

Eigenvectors are carried around the loop by a biorthogonal transport:
right vectors ``r`` and left vectors ``l`` (``H^T l = E l``) are kept with
``l^T r = 1`` and each step is rescaled so that both stay as close as
possible to their predecessors. For complex-symmetric families this
reproduces the exact sign structure of the square-root branch point (one
vector flips, the other does not; -1 for both after two loops; +1 after
four). The Hermitian-overlap gauge is available as ``gauge="hermitian"``
but does not give quantised phases for non-Hermitian matrices.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .epfind import EPLocation, ep_closed_form
from .errors import (
    EpscopeError,
    GaugeBreakdownError,
    InvalidParameterError,
    LoopThroughEPError,
)
from .model import MatrixFamily
from .spectra import eigenvalues_general, eigenvector_general
from .tracking import (
    CONTINUITY_OVERLAP,
    gauge_align,
    hermitian_transport,
    initial_order,
    track,
)

__all__ = [
    "LoopSpec",
    "MonodromyResult",
    "encircle",
    "gauge_align",
    "sheet_swap_check",
]

LOOP_MAX_DEPTH = 14
LOOP_GAP_TOL = 1e-8
EP_CLEARANCE = 1e-3  # in units of the radius
GAUGES = ("biorthogonal", "hermitian")


@dataclass(frozen=True)
class LoopSpec:
    """Circle ``center + radius*exp(i*(start_angle + 2*pi*orientation*t))``, ``t in [0, loops]``.

    ``steps`` counts grid intervals per loop; adaptive bisection may add points.
    """

    center: complex
    radius: float
    steps: int = 4096
    loops: int = 1
    start_angle: float = 0.0
    orientation: int = 1

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        if not cmath.isfinite(self.center):
            raise InvalidParameterError(f"center must be finite, got {self.center}")
        r = float(self.radius)
        if not (math.isfinite(r) and r > 0):
            raise InvalidParameterError(f"radius must be > 0, got {self.radius!r}")
        object.__setattr__(self, "radius", r)
        for name, low in (("steps", 64), ("loops", 1)):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < low:
                raise InvalidParameterError(f"{name} must be an integer >= {low}, got {v!r}")
            object.__setattr__(self, name, int(v))
        if not math.isfinite(self.start_angle):
            raise InvalidParameterError("start_angle must be finite")
        if self.orientation not in (1, -1):
            raise InvalidParameterError(f"orientation must be +1 or -1, got {self.orientation!r}")

    def point(self, t) -> complex:
        return self.center + self.radius * cmath.exp(
            1j * (self.start_angle + 2 * math.pi * self.orientation * t))

    @property
    def base_point(self) -> complex:
        return self.point(0.0)


@dataclass(frozen=True)
class MonodromyResult:
    """Outcome of a loop.

    Transported vector ``k`` returns as ``phases[k]`` times initial vector
    ``permutation[k]``. ``factors`` are the raw (unnormalised) overlaps;
    their moduli measure how well the transport closed.
    """

    permutation: tuple
    phases: tuple
    factors: tuple
    discretization_error: float
    min_gap: float
    points: int
    gauge: str = "biorthogonal"

    def then(self, other: "MonodromyResult") -> "MonodromyResult":
        """Holonomy of this loop followed by ``other`` (same base point and labels)."""
        n = len(self.permutation)
        perm = tuple(other.permutation[self.permutation[k]] for k in range(n))
        phases = tuple(self.phases[k] * other.phases[self.permutation[k]] for k in range(n))
        factors = tuple(self.factors[k] * other.factors[self.permutation[k]] for k in range(n))
        return MonodromyResult(perm, phases, factors,
                               self.discretization_error + other.discretization_error,
                               min(self.min_gap, other.min_gap), self.points + other.points,
                               self.gauge)


def _norm(v):
    return math.sqrt(np.vdot(v, v).real)


def _biorthogonal_transport(h, energies, prev, strict):
    n = h.shape[0]
    rs = np.empty((n, n), dtype=complex)
    ls = np.empty((n, n), dtype=complex)
    deficit = 0.0
    for k, e in enumerate(energies):
        ev = eigenvector_general(h, e, condition=True)
        r_hat, l_hat = ev.vector, ev.left
        lr = l_hat @ r_hat
        if abs(lr) <= 1e-12 * _norm(l_hat) * _norm(r_hat):
            raise GaugeBreakdownError(f"left and right vectors of label {k} are orthogonal")
        if prev is None:
            s = cmath.sqrt(r_hat @ r_hat)
            if abs(s) < 1e-6:
                # self-orthogonal right vector; any scale works for the start
                s = 1.0
            rs[k] = r_hat / s
            ls[k] = l_hat * s / lr
            continue
        r_prev, l_prev = prev[0][k], prev[1][k]
        overlap = abs(np.vdot(r_prev, r_hat)) / (_norm(r_prev) * _norm(r_hat))
        if strict and overlap < CONTINUITY_OVERLAP:
            raise GaugeBreakdownError(f"overlap {overlap:.3f} on label {k}")
        a = l_prev @ r_hat
        b = r_prev @ l_hat
        if a == 0:
            raise GaugeBreakdownError(f"label {k}: new right vector has no overlap")
        c = cmath.sqrt(b / (a * lr))
        if (c * a).real < 0:
            c = -c
        rs[k] = c * r_hat
        ls[k] = l_hat / (c * lr)
        deficit += 1.0 - overlap
    return (rs, ls), deficit


def _known_eps(f: MatrixFamily):
    if f.params is None:
        return []
    try:
        return [ep.lambda_c for ep in ep_closed_form(f.params)]
    except EpscopeError:
        return []


def _suggest_radii(spec: LoopSpec, eps):
    radii = []
    for factor in (0.5, 0.8, 1.25, 2.0):
        r = spec.radius * factor
        if all(abs(abs(lc - spec.center) - r) > 0.1 * r for lc in eps):
            radii.append(r)
    return radii or [0.5 * spec.radius, 2.0 * spec.radius]


def encircle(f: MatrixFamily, spec: LoopSpec, gauge: str = "biorthogonal") -> MonodromyResult:
    """Walk ``spec`` and report the permutation and phases of the eigenvectors.

    Raises
    ------
    LoopThroughEPError
        If the circle runs within ``1e-3*radius`` of a known EP, the gap drops
        below ``1e-8`` on the path, or a step cannot be resolved by bisection.
    """
    if gauge not in GAUGES:
        raise InvalidParameterError(f"gauge must be one of {GAUGES}, got {gauge!r}")
    eps = _known_eps(f)
    for lc in eps:
        if abs(abs(lc - spec.center) - spec.radius) < EP_CLEARANCE * spec.radius:
            raise LoopThroughEPError(
                f"circle passes within {EP_CLEARANCE:g}*radius of the EP at {lc}",
                suggested_radii=_suggest_radii(spec, eps))

    transport = _biorthogonal_transport if gauge == "biorthogonal" else hermitian_transport
    grid = np.linspace(0.0, spec.loops, spec.steps * spec.loops + 1)
    try:
        tr = track(f, spec.point, grid, transport, max_depth=LOOP_MAX_DEPTH)
    except GaugeBreakdownError as exc:
        raise LoopThroughEPError(f"transport broke down: {exc}",
                                 suggested_radii=_suggest_radii(spec, eps)) from exc
    scale = 1.0 + float(np.max(np.abs(tr.energies)))
    gap = float(np.min(tr.gaps))
    if gap < LOOP_GAP_TOL * scale or np.any(tr.degenerate):
        raise LoopThroughEPError(
            f"levels nearly coalesce on the loop (min gap {gap:.2e})",
            suggested_radii=_suggest_radii(spec, eps))

    start, end = tr.energies[0], tr.energies[-1]
    cost = np.abs(end[:, None] - start[None, :])
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(len(start), dtype=int)
    perm[rows] = cols

    first, last = tr.states[0], tr.states[-1]
    factors = []
    for k, j in enumerate(perm):
        if gauge == "biorthogonal":
            factors.append(complex(first[1][j] @ last[0][k]))
        else:
            factors.append(complex(np.vdot(first[j], last[k])))
    phases = tuple(c / abs(c) if c != 0 else complex("nan") for c in factors)
    return MonodromyResult(tuple(int(j) for j in perm), phases, tuple(factors),
                           float(tr.deficit), gap, len(tr.ts), gauge)


def sheet_swap_check(f: MatrixFamily, ep: EPLocation, radius=None, steps=1024) -> bool:
    """True iff one loop around ``ep`` swaps exactly the coalescing pair.

    The pair is identified on the loop as the two labels whose starting
    energies lie closest to the EP energy.
    """
    if radius is None:
        radius = 0.05 * (1 + abs(ep.lambda_c))
        others = [abs(lc - ep.lambda_c) for lc in _known_eps(f)
                  if abs(lc - ep.lambda_c) > 1e-6 * (1 + abs(ep.lambda_c))]
        if others:
            radius = min(radius, 0.3 * min(others))
    spec = LoopSpec(ep.lambda_c, radius, steps=steps, loops=1)
    res = encircle(f, spec)
    start = initial_order(eigenvalues_general(f(spec.base_point)).eigenvalues)
    a, b = (int(k) for k in np.argsort(np.abs(start - ep.energy))[:2])
    expected = list(range(len(start)))
    expected[a], expected[b] = b, a
    return list(res.permutation) == expected

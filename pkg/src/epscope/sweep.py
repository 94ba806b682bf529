"""Real-lambda sweeps, crossing classification and mixing angles.

Along a real sweep two levels that pass near an EP either repel in their
real parts while their widths cross, or the other way round; a sweep that
runs exactly through a real EP has both differences vanish at once, and
the trajectories meet at a right angle in the energy plane.
"""
from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import minimize_scalar

from .epfind import EPLocation, ep_refine
from .errors import (
    InvalidEPError,
    InvalidParameterError,
    NoPassageError,
    RefineError,
)
from .model import MatrixFamily, TwoLevelParams
from .spectra import eigenvalues_closed_form, eigenvalues_general, min_gap
from .tracking import assign, hermitian_transport, track

__all__ = [
    "TrajectorySet",
    "CrossingKind",
    "CrossingClass",
    "MixingResult",
    "sweep_real",
    "classify_crossing",
    "crossing_angle_at_ep",
    "mixing_angle",
    "theta_sweep",
    "sheet_of",
    "write_csv",
    "read_csv",
]

SWEEP_MAX_DEPTH = 12
# |d| at the window edges must exceed the minimum gap by this factor
EDGE_GAP_FACTOR = 10.0
# a passage counts as exact when the squared gap drops this far below the edges
TOUCH_RATIO = 1e-5
CROSSING_XTOL = 1e-9
ANGLE_GAP_TOL = 1e-4


@dataclass
class TrajectorySet:
    """Labelled spectra along a real sweep.

    ``energies[t, k]`` is level ``k`` at ``lambdas[t]``; ``vectors[t, k]`` its
    unit eigenvector (when requested). ``pairing_cost[t]`` is the total
    assignment distance from step ``t-1`` and ``degenerate[t]`` marks steps
    whose labels came from velocity extrapolation.
    """

    lambdas: np.ndarray
    energies: np.ndarray
    pairing_cost: np.ndarray
    degenerate: np.ndarray
    vectors: np.ndarray | None = None
    family: MatrixFamily | None = None

    @property
    def n(self) -> int:
        return self.energies.shape[1]

    def __len__(self):
        return len(self.lambdas)


class CrossingKind(str, Enum):
    RE_AVOID_IM_CROSS = "RE_AVOID_IM_CROSS"
    RE_CROSS_IM_AVOID = "RE_CROSS_IM_AVOID"
    BOTH_CROSS_AT_EP = "BOTH_CROSS_AT_EP"


@dataclass(frozen=True)
class CrossingClass:
    kind: CrossingKind
    crossing_lambda: float
    ep_distance: float
    nearest_ep: EPLocation | None = None
    min_gap: float = math.nan


@dataclass(frozen=True)
class MixingResult:
    alpha: float
    signs: tuple
    residual: float

    def __iter__(self):
        return iter((self.alpha, self.signs, self.residual))


def sweep_real(f: MatrixFamily, lambda_min, lambda_max, steps, with_vectors=False) -> TrajectorySet:
    """Track the spectrum of ``f`` over ``steps`` intervals of ``[lambda_min, lambda_max]``."""
    lambda_min, lambda_max = float(lambda_min), float(lambda_max)
    if not (math.isfinite(lambda_min) and math.isfinite(lambda_max)) or lambda_min >= lambda_max:
        raise InvalidParameterError(
            f"need finite lambda_min < lambda_max, got [{lambda_min}, {lambda_max}]")
    if int(steps) != steps or steps < 2:
        raise InvalidParameterError(f"steps must be an integer >= 2, got {steps!r}")
    grid = np.linspace(lambda_min, lambda_max, int(steps) + 1)
    tr = track(f, complex, grid, hermitian_transport if with_vectors else None,
               max_depth=SWEEP_MAX_DEPTH)
    return TrajectorySet(
        lambdas=tr.ts,
        energies=tr.energies,
        pairing_cost=tr.costs,
        degenerate=tr.degenerate,
        vectors=np.array(tr.states) if with_vectors else None,
        family=f,
    )


def _window(lam, g, k0):
    """Index bounds around the gap minimum, widened until the gap has opened up."""
    step = float(np.median(np.diff(lam)))
    delta = max(3 * step, 0.01 * (lam[-1] - lam[0]))
    lo = max(int(np.searchsorted(lam, lam[k0] - delta, "left")), 0)
    hi = min(int(np.searchsorted(lam, lam[k0] + delta, "right")) - 1, len(lam) - 1)
    target = EDGE_GAP_FACTOR * g[k0]
    while lo > 0 and g[lo] < target:
        lo -= 1
    while hi < len(lam) - 1 and g[hi] < target:
        hi += 1
    return lo, hi


def _pair_difference(f, lam, t, k, pair):
    """E_i - E_j at a real ``lam`` between samples ``k`` and ``k+1``."""
    la, lb = t.lambdas[k], t.lambdas[k + 1]
    w = (lam - la) / (lb - la) if lb != la else 0.0
    predicted = t.energies[k] + w * (t.energies[k + 1] - t.energies[k])
    spec = eigenvalues_general(f(lam), initial=predicted).eigenvalues
    labelled, _ = assign(predicted, spec)
    return labelled[pair[0]] - labelled[pair[1]]


def _sign_change_index(values, lo, hi):
    """Index ``k`` in ``[lo, hi)`` with a sign change between ``k`` and ``k+1``."""
    s = np.sign(values[lo:hi + 1])
    idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
    if len(idx) == 0:
        # a sample may sit exactly on zero
        idx = np.nonzero((s[:-1] != s[1:]))[0]
    return lo + int(idx[0])


def _refine_sign_change(t, pair, k, component):
    """Bisect the sign change of ``component`` (``"re"``/``"im"``) inside step ``k``."""
    lam = t.lambdas
    d = t.energies[:, pair[0]] - t.energies[:, pair[1]]
    part = (lambda z: z.real) if component == "re" else (lambda z: z.imag)
    other = (lambda z: z.imag) if component == "re" else (lambda z: z.real)
    a, b = float(lam[k]), float(lam[k + 1])
    fa = part(d[k])
    if t.family is None:
        fb = part(d[k + 1])
        return a if fa == fb else a + (b - a) * fa / (fa - fb)
    # keep the pair orientation fixed by the component that does not flip
    ref = np.sign(other(d[k])) or np.sign(other(d[k + 1])) or 1.0

    def value(x):
        z = _pair_difference(t.family, x, t, k, pair)
        if np.sign(other(z)) == -ref:
            z = -z
        return part(z)

    sa = np.sign(fa)
    while b - a > CROSSING_XTOL * max(1.0, abs(a)):
        m = 0.5 * (a + b)
        vm = value(m)
        if vm == 0:
            return m
        if np.sign(vm) == sa:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def _refined_minimum(t, pair, k0):
    """Minimum of |E_i - E_j| near sample ``k0``; returns ``(lambda, gap)``."""
    lam = t.lambdas
    g = np.abs(t.energies[:, pair[0]] - t.energies[:, pair[1]])
    if len(lam) < 3:
        return float(lam[k0]), float(g[k0])
    lo, hi = max(k0 - 1, 0), min(k0 + 1, len(lam) - 1)
    if t.family is None:
        # (E_i - E_j)^2 is analytic through an EP (exactly quadratic for two
        # levels), so a local quadratic fit of the samples resolves the minimum
        a, b = max(k0 - 2, 0), min(k0 + 3, len(lam))
        d = t.energies[a:b, pair[0]] - t.energies[a:b, pair[1]]
        x0, scale = float(lam[k0]), float(lam[hi] - lam[lo])
        coef = np.polyfit((lam[a:b] - x0) / scale, d * d, min(2, b - a - 1))

        def gap(x):
            return math.sqrt(abs(np.polyval(coef, (x - x0) / scale)))
    else:
        def gap(x):
            k = min(max(int(np.searchsorted(lam, x, "right")) - 1, lo), hi - 1)
            return abs(_pair_difference(t.family, x, t, k, pair))

    res = minimize_scalar(gap, bounds=(float(lam[lo]), float(lam[hi])), method="bounded",
                          options={"xatol": CROSSING_XTOL})
    if res.fun < g[k0]:
        return float(res.x), float(res.fun)
    return float(lam[k0]), float(g[k0])


def _nearest_ep(f, lam):
    if f is None:
        return None
    try:
        return ep_refine(f, lam)
    except RefineError:
        return None


def classify_crossing(t: TrajectorySet, pair=(0, 1)) -> CrossingClass:
    """Classify how levels ``pair`` pass each other along the sweep ``t``.

    The gap minimum of the pair fixes a neighbourhood that is widened until
    the gap has opened to ``EDGE_GAP_FACTOR`` times its minimum (or the sweep
    ends). The signs of ``Re`` and ``Im`` of ``E_i - E_j`` are compared at
    its edges. A passage whose minimum gap is negligible against the edges
    and whose difference turns by roughly a right angle is an EP passage.

    Raises
    ------
    NoPassageError
        When neither difference changes sign.
    """
    i, j = pair
    if i == j or not (0 <= i < t.n and 0 <= j < t.n):
        raise InvalidParameterError(f"invalid pair {pair!r} for {t.n} levels")
    if len(t) < 3:
        raise InvalidParameterError("sweep too short to classify")
    lam = np.asarray(t.lambdas, dtype=float)
    d = t.energies[:, i] - t.energies[:, j]
    g = np.abs(d)
    k0 = int(np.argmin(g))
    lo, hi = _window(lam, g, k0)
    re_flip = np.sign(d[lo].real) * np.sign(d[hi].real) < 0
    im_flip = np.sign(d[lo].imag) * np.sign(d[hi].imag) < 0

    lam_min, g_min = _refined_minimum(t, pair, k0)
    g_edge = min(g[lo], g[hi])
    turn = abs(cmath.phase(d[hi] / d[lo])) if g_edge > 0 else 0.0
    touches = g_min ** 2 < TOUCH_RATIO * g_edge ** 2 and math.pi / 4 < turn < 3 * math.pi / 4

    if touches or (re_flip and im_flip):
        kind = CrossingKind.BOTH_CROSS_AT_EP
        crossing = lam_min
    elif re_flip or im_flip:
        component = "re" if re_flip else "im"
        values = d.real if re_flip else d.imag
        k = _sign_change_index(values, lo, hi)
        crossing = _refine_sign_change(t, pair, k, component)
        kind = (CrossingKind.RE_CROSS_IM_AVOID if re_flip
                else CrossingKind.RE_AVOID_IM_CROSS)
    else:
        raise NoPassageError(
            f"levels {pair} change neither order on [{lam[lo]:.6g}, {lam[hi]:.6g}]")

    ep = _nearest_ep(t.family, crossing)
    if ep is None and t.family is not None and crossing != lam_min:
        ep = _nearest_ep(t.family, lam_min)
    distance = abs(ep.lambda_c.imag) if ep is not None else math.nan
    return CrossingClass(kind, float(crossing), float(distance), ep, float(g_min))


def crossing_angle_at_ep(f: MatrixFamily, lambda_c) -> float:
    """Angle, in degrees, by which a trajectory turns when passing a real EP.

    Raises
    ------
    InvalidEPError
        If the gap at ``lambda_c`` is not negligible.
    """
    lam = complex(lambda_c)
    if abs(lam.imag) > 1e-8 * (1 + abs(lam)):
        raise InvalidEPError(f"lambda_c must be real, got {lam}")
    lam = lam.real
    eigs = eigenvalues_general(f(lam)).eigenvalues
    gap, (a, b) = min_gap(eigs)
    scale = 1.0 + float(np.max(np.abs(eigs)))
    if gap > ANGLE_GAP_TOL * scale:
        raise InvalidEPError(f"lambda={lam} is no EP: gap {gap:.3e}")
    ec = 0.5 * (eigs[a] + eigs[b])
    h = 1e-4 * (1 + abs(lam))

    def pair_near(x):
        e = eigenvalues_general(f(x)).eigenvalues
        order = np.argsort(np.abs(e - ec))
        return e[order[:2]]

    incoming = ec - pair_near(lam - h)[0]
    outgoing = pair_near(lam + h) - ec
    angles = [abs(math.degrees(cmath.phase(o / incoming))) for o in outgoing]
    return float(min(angles))


def _fold_phase(v):
    """Make the largest component real, changing the vector by a phase in (-pi/2, pi/2]."""
    v = np.asarray(v, dtype=complex)
    k = int(np.argmax(np.abs(v)))
    a = cmath.phase(v[k])
    if a > math.pi / 2:
        a -= math.pi
    elif a <= -math.pi / 2:
        a += math.pi
    return v * cmath.exp(-1j * a)


def mixing_angle(basis_before, vecs_after) -> MixingResult:
    """Fit ``after = (psi1 cos a - psi2 sin a, psi1 sin a + psi2 cos a)`` up to signs.

    Each vector first has its overall phase removed so that its largest
    component is real (the sign of that component is kept, since the sign
    pattern is the quantity of interest). For every sign choice of the two
    after-vectors ``alpha`` is fitted on ``[0, pi/2]`` by least squares; the
    best fit is returned with its signs and residual norm.
    """
    vs = [np.asarray(v, dtype=complex) for v in (*basis_before, *vecs_after)]
    if len(vs) != 4 or any(v.shape != (2,) for v in vs):
        raise InvalidParameterError("mixing_angle needs two pairs of 2-component vectors")
    for v in vs:
        if abs(np.linalg.norm(v) - 1) > 1e-6:
            raise InvalidParameterError(f"vector {v} is not unit-norm")
    p1, p2, a, b = (_fold_phase(v) for v in vs)

    def residual(alpha, sa, sb):
        c, s = math.cos(alpha), math.sin(alpha)
        return (np.linalg.norm(sa * a - (p1 * c - p2 * s)) ** 2
                + np.linalg.norm(sb * b - (p1 * s + p2 * c)) ** 2)

    best = None
    coarse = np.linspace(0, math.pi / 2, 91)
    for sa in (1, -1):
        for sb in (1, -1):
            r = [residual(x, sa, sb) for x in coarse]
            k = int(np.argmin(r))
            lo, hi = coarse[max(k - 1, 0)], coarse[min(k + 1, len(coarse) - 1)]
            res = minimize_scalar(residual, bounds=(lo, hi), args=(sa, sb), method="bounded",
                                  options={"xatol": 1e-12})
            alpha, val = (res.x, res.fun) if res.fun <= r[k] else (coarse[k], r[k])
            if best is None or val < best[2] - 1e-14:
                best = (float(alpha), (sa, sb), float(val))
    alpha, signs, val = best
    return MixingResult(alpha, signs, math.sqrt(max(val, 0.0)))


def sheet_of(p: TwoLevelParams, lam, energy) -> int:
    """Sheet (+1/-1) whose ``e1`` is closest to ``energy`` at ``lam``."""
    e_plus = eigenvalues_closed_form(p, lam, 1).e1
    e_minus = eigenvalues_closed_form(p, lam, -1).e1
    return 1 if abs(e_plus - energy) <= abs(e_minus - energy) else -1


def _two_level_parts(p, lams):
    c1, s1 = math.cos(2 * p.phi1), math.sin(2 * p.phi1)
    c2, s2 = math.cos(2 * p.phi2), math.sin(2 * p.phi2)
    wd, sd = 0.5 * (p.omega1 - p.omega2), 0.5 * (p.sigma1 - p.sigma2)
    g = -1j * p.mu
    z = 0.5 * (p.eps1 - p.eps2) + lams * wd * c1 + g * sd * c2
    x = lams * wd * s1 + g * sd * s2
    return z, x


def theta_sweep(p: TwoLevelParams, lambdas, sheet=1, max_refine=16) -> np.ndarray:
    """Mixing angle ``theta`` continued along the path ``lambdas``.

    Starts on ``sheet`` at ``lambdas[0]`` and follows the square root
    continuously (the path may be complex but must avoid EPs); the result is
    unwrapped so it is free of jumps by multiples of pi. Intervals are
    oversampled internally until the continuation is resolved.
    """
    lambdas = np.asarray(lambdas)
    if lambdas.ndim != 1 or len(lambdas) < 1:
        raise InvalidParameterError("lambdas must be a non-empty 1-d array")
    if sheet not in (1, -1):
        raise InvalidParameterError(f"sheet must be +1 or -1, got {sheet!r}")
    m = 1
    while True:
        if len(lambdas) > 1 and m > 1:
            w = np.arange(m) / m
            fine = (lambdas[:-1, None] + w * (lambdas[1:] - lambdas[:-1])[:, None]).ravel()
            fine = np.append(fine, lambdas[-1])
        else:
            fine = lambdas
        z, x = _two_level_parts(p, fine.astype(complex))
        r = np.sqrt(z * z + x * x)
        flip = np.abs(r[1:] - r[:-1]) > np.abs(r[1:] + r[:-1])
        signs = sheet * np.concatenate(([1.0], np.cumprod(np.where(flip, -1.0, 1.0))))
        r = signs * r
        jumps = np.abs(np.diff(r))
        resolved = np.all(jumps <= 0.25 * np.minimum(np.abs(r[1:]), np.abs(r[:-1])))
        if resolved or m >= 2 ** max_refine:
            break
        m *= 2
    if np.any(np.abs(r) < 1e-10 * (1 + np.abs(z))):
        raise InvalidParameterError("path passes through an EP")
    plus, minus = r + z, r - z
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = np.arctan(x / plus)
        other = math.pi / 2 - np.arctan(x / minus)
    theta = np.where(np.abs(plus) >= np.abs(minus), direct, other)
    step = np.round(np.diff(theta.real) / math.pi)
    theta = theta - math.pi * np.concatenate(([0.0], np.cumsum(step)))
    if not resolved:
        raise InvalidParameterError("theta continuation unresolved; path too close to an EP")
    return theta[::m] if m > 1 else theta


def write_csv(t: TrajectorySet, path) -> None:
    """Write ``lambda,re_E1,im_E1,...`` with one row per accepted step."""
    header = ["lambda"]
    for k in range(t.n):
        header += [f"re_E{k + 1}", f"im_E{k + 1}"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for lam, row in zip(t.lambdas, t.energies):
            out = [repr(float(lam))]
            for e in row:
                out += [repr(float(e.real)), repr(float(e.imag))]
            w.writerow(out)


def read_csv(path) -> TrajectorySet:
    """Parse a trajectory CSV back into a :class:`TrajectorySet` (no family attached)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "lambda" or len(rows[0]) % 2 != 1:
        raise InvalidParameterError(f"{path}: not a trajectory CSV")
    data = np.array([[float(x) for x in row] for row in rows[1:]], dtype=float)
    if data.ndim != 2 or len(data) == 0:
        raise InvalidParameterError(f"{path}: no data rows")
    energies = data[:, 1::2] + 1j * data[:, 2::2]
    cost = np.concatenate(([0.0], np.abs(np.diff(energies, axis=0)).sum(axis=1)))
    return TrajectorySet(data[:, 0], energies, cost, np.zeros(len(data), bool))

"""Locating exceptional points in the complex lambda plane.

Two-level models have closed-form EP positions. General families are
handled by a grid scan of ``|disc(lambda)|`` followed by complex Newton
refinement of the discriminant, which has a simple zero at every EP.
"""
from __future__ import annotations

import cmath
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (DegenerateSlopesError, InvalidParameterError, RefineError,
                     ScanUnreliableError, SolverError)
from .model import MatrixFamily, TwoLevelParams, build_two_level, two_level_family
from .spectra import (EP_GAP_TOL, discriminant_batch, discriminant_from_eigenvalues,
                      eigenvalues_general, min_gap)

__all__ = [
    "EPLocation",
    "SearchRegion",
    "PairingReport",
    "ep_candidates",
    "ep_closed_form",
    "ep_scan",
    "ep_refine",
    "locate",
    "winding_number",
    "conjugate_pairing_check",
]

CLOSED_FORM_DISC_TOL = 1e-10
NEWTON_MAXITER = 50
SCAN_THRESHOLD = 1e-2
# |disc| is the modulus of an analytic function, so interior grid minima sit
# next to zeros; refinement rejects the rest, and the looser cut keeps EPs
# that fall between grid nodes of a coarse scan
LOCATE_THRESHOLD = 0.5


@dataclass(frozen=True)
class EPLocation:
    """A located EP.

    ``pair`` indexes ``eigenvalues``, the spectrum computed at ``lambda_c``;
    ``energy`` is the mean of the coalescing pair.
    """

    lambda_c: complex
    pair: tuple
    residual: float
    gap: float
    energy: complex
    eigenvalues: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        object.__setattr__(self, "lambda_c", complex(self.lambda_c))
        object.__setattr__(self, "pair", tuple(int(k) for k in self.pair))
        object.__setattr__(self, "residual", float(self.residual))
        object.__setattr__(self, "gap", float(self.gap))
        object.__setattr__(self, "energy", complex(self.energy))


@dataclass(frozen=True)
class SearchRegion:
    re_min: float
    re_max: float
    im_min: float
    im_max: float
    grid_re: int = 64
    grid_im: int = 64

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise InvalidParameterError(f"empty search region {self}")
        if self.grid_re < 8 or self.grid_im < 8:
            raise InvalidParameterError("search grid needs at least 8 points per axis")

    @classmethod
    def around(cls, center, half_width, grid=32) -> "SearchRegion":
        c = complex(center)
        return cls(c.real - half_width, c.real + half_width,
                   c.imag - half_width, c.imag + half_width, grid, grid)

    @property
    def steps(self):
        return ((self.re_max - self.re_min) / (self.grid_re - 1),
                (self.im_max - self.im_min) / (self.grid_im - 1))

    @property
    def cell_diameter(self) -> float:
        return math.hypot(*self.steps)

    def grid(self) -> np.ndarray:
        """Lambda values, shape ``(grid_im, grid_re)``."""
        re = np.linspace(self.re_min, self.re_max, self.grid_re)
        im = np.linspace(self.im_min, self.im_max, self.grid_im)
        return re[None, :] + 1j * im[:, None]

    def contains(self, lam, margin=0.0) -> bool:
        lam = complex(lam)
        return (self.re_min - margin <= lam.real <= self.re_max + margin
                and self.im_min - margin <= lam.imag <= self.im_max + margin)


# ---------------------------------------------------------- closed form

def ep_candidates(p: TwoLevelParams):
    """All four sign combinations of the closed EP formula with their |disc|.

    ``lambda = (-1 + i mu e^{+-2i phi2} dsigma/deps) e^{+-2i phi1} deps/domega``,
    written without the division by ``deps``. Returns a list of
    ``(lambda, (s1, s2), |disc|)`` where ``s1``/``s2`` are the signs in the
    ``phi1``/``phi2`` exponentials.
    """
    dw = p.omega1 - p.omega2
    if dw == 0:
        raise DegenerateSlopesError(
            "degenerate slopes: omega1 == omega2, the EP formula divides by omega1 - omega2")
    de = p.eps1 - p.eps2
    if p.mu == 0 and de == 0:
        raise InvalidParameterError("eps1 == eps2 with mu = 0: no EP, only a trivial degeneracy")
    ds = p.sigma1 - p.sigma2
    out = []
    for s1 in (1, -1):
        for s2 in (1, -1):
            lam = (-de + 1j * p.mu * ds * cmath.exp(2j * s2 * p.phi2)) \
                * cmath.exp(2j * s1 * p.phi1) / dw
            disc = abs(4 * _radicand(p, lam))
            out.append((complex(lam), (s1, s2), disc))
    return out


def _radicand(p, lam):
    h = build_two_level(p, lam)
    half = 0.5 * (h[0, 0] - h[1, 1])
    return half * half + h[0, 1] * h[1, 0]


def ep_closed_form(p: TwoLevelParams) -> list:
    """EPs of the two-level model from the closed formula.

    Every sign combination is evaluated; those whose discriminant vanishes
    (``|disc| < 1e-10``) are kept, duplicates removed.
    """
    result = []
    for lam, _, disc in ep_candidates(p):
        if disc >= CLOSED_FORM_DISC_TOL:
            continue
        if any(abs(lam - e.lambda_c) <= 1e-12 * (1 + abs(lam)) for e in result):
            continue
        h = build_two_level(p, lam)
        mean = 0.5 * (h[0, 0] + h[1, 1])
        r = cmath.sqrt(_radicand(p, lam))
        eigs = np.array([mean + r, mean - r])
        result.append(EPLocation(lam, (0, 1), disc, 2 * abs(r), complex(mean), eigs))
    return result


# ------------------------------------------------------------------ scan

def _default_workers():
    env = os.environ.get("EPSCOPE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _disc_grid(f, lams, workers):
    rows = lams.shape[0]
    workers = max(1, min(workers, rows))
    if workers == 1:
        return discriminant_batch(f, lams)
    chunks = np.array_split(np.arange(rows), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda idx: discriminant_batch(f, lams[idx]), chunks))
    # merge in row order for determinism
    disc = np.concatenate([p[0] for p in parts], axis=0)
    ok = np.concatenate([p[1] for p in parts], axis=0)
    return disc, ok


def _cell_winding(disc, ok):
    """Winding of ``disc`` around each grid cell (argument principle on its corners)."""
    corners = [disc[:-1, :-1], disc[:-1, 1:], disc[1:, 1:], disc[1:, :-1]]
    good = ok[:-1, :-1] & ok[:-1, 1:] & ok[1:, 1:] & ok[1:, :-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        turn = sum(np.angle(corners[(k + 1) % 4] / corners[k]) for k in range(4))
        nonzero = np.all([c != 0 for c in corners], axis=0)
    return np.where(good & nonzero & np.isfinite(turn), np.rint(turn / (2 * np.pi)), 0)


def ep_scan(f: MatrixFamily, region: SearchRegion, workers=None,
            threshold=SCAN_THRESHOLD) -> list:
    """EP candidates on a lambda grid.

    A grid point qualifies when ``|disc|`` there is below all eight
    neighbours and below ``threshold`` times the grid median. The centre of
    any cell around whose corners ``disc`` winds also qualifies; this
    catches zeros that a strong overall growth of ``|disc|`` hides from the
    minimum test. Candidates closer than one cell diameter are merged.
    Thread parallelism is capped by ``EPSCOPE_THREADS``.

    Raises
    ------
    ScanUnreliableError
        If more than 10% of the grid cells failed to solve.
    """
    lams = region.grid()
    disc, ok = _disc_grid(f, lams, workers or _default_workers())
    failed = int((~ok).sum())
    if failed > 0.1 * ok.size:
        raise ScanUnreliableError(
            f"{failed} of {ok.size} grid cells failed to solve", failed, ok.size)
    v = np.where(ok, np.abs(disc), np.inf)
    finite = v[np.isfinite(v)]
    if finite.size == 0:
        return []
    core = v[1:-1, 1:-1]
    is_min = np.isfinite(core) & (core < threshold * np.median(finite))
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            nb = v[1 + di:v.shape[0] - 1 + di, 1 + dj:v.shape[1] - 1 + dj]
            is_min &= core < nb
    ii, jj = np.nonzero(is_min)
    cands = [(core[i, j], complex(lams[i + 1, j + 1])) for i, j in zip(ii, jj)]
    wi, wj = np.nonzero(_cell_winding(disc, ok))
    for i, j in zip(wi, wj):
        block = v[i:i + 2, j:j + 2]
        centre = complex(lams[i:i + 2, j:j + 2].mean())
        cands.append((float(block.min()), centre))
    cands.sort(key=lambda c: c[0])
    radius = region.cell_diameter
    picked = []
    for _, lam in cands:
        if all(abs(lam - q) > radius for q in picked):
            picked.append(lam)
    return picked


# ---------------------------------------------------------------- refine

def _disc_and_spectrum(f, lam):
    eigs = eigenvalues_general(f(lam)).eigenvalues
    return discriminant_from_eigenvalues(eigs), eigs


def _disc_scale(eigs, pair):
    scale = (1 + abs(eigs[pair[0]])) ** 2
    n = len(eigs)
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) != pair:
                scale *= abs(eigs[i] - eigs[j]) ** 2
    return scale


def ep_refine(f: MatrixFamily, lambda0, maxiter=NEWTON_MAXITER, tol=1e-12) -> EPLocation:
    """Complex Newton iteration on ``disc(lambda)`` from ``lambda0``.

    The derivative is a central difference with step ``1e-6 (1 + |lambda|)``.
    Iteration stops once ``|disc|`` drops below ``tol`` times the product of
    the non-coalescing squared gaps (times ``(1 + |E|)**2``), or when the
    Newton step reaches the rounding floor.

    Raises
    ------
    RefineError
        On divergence, failure to reach an EP, or when two different pairs
        are within a factor 10 of the smallest gap.
    """
    lam = complex(lambda0)
    history = []
    try:
        d, eigs = _disc_and_spectrum(f, lam)
        converged = False
        for it in range(maxiter + 1):
            gap, pair = min_gap(eigs)
            history.append((lam, abs(d)))
            if abs(d) <= tol * _disc_scale(eigs, pair):
                converged = True
                break
            if it == maxiter:
                break
            h = 1e-6 * (1 + abs(lam))
            dp = (_disc_and_spectrum(f, lam + h)[0] - _disc_and_spectrum(f, lam - h)[0]) / (2 * h)
            if dp == 0 or not cmath.isfinite(dp):
                raise RefineError("vanishing discriminant derivative",
                                  {"lambda": lam, "history": history})
            step = d / dp
            new = lam - step
            dn, en = _disc_and_spectrum(f, new)
            # damped Newton: halve until |disc| decreases
            for _ in range(30):
                if abs(dn) < abs(d):
                    break
                step *= 0.5
                new = lam - step
                dn, en = _disc_and_spectrum(f, new)
            else:
                if abs(step) > 1e-13 * (1 + abs(lam)):
                    raise RefineError("Newton iteration stalled",
                                      {"lambda": lam, "history": history})
            lam, d, eigs = new, dn, en
            if abs(step) <= 4e-16 * (1 + abs(lam)):
                gap, pair = min_gap(eigs)
                converged = gap <= EP_GAP_TOL * (1 + abs(eigs[pair[0]]))
                history.append((lam, abs(d)))
                break
            if abs(lam - complex(lambda0)) > 1e3 * (1 + abs(lambda0)):
                raise RefineError("Newton iteration diverged",
                                  {"lambda": lam, "history": history})
    except SolverError as exc:
        raise RefineError(f"eigenvalue solve failed during refinement: {exc}",
                          {"lambda": lam, "history": history}) from exc
    if not converged:
        raise RefineError(f"no convergence after {maxiter} Newton steps",
                          {"lambda": lam, "history": history})
    gap, pair = min_gap(eigs)
    others = [abs(eigs[i] - eigs[j]) for i in range(len(eigs))
              for j in range(i + 1, len(eigs)) if (i, j) != pair]
    if others and min(others) < 10 * gap:
        raise RefineError("ambiguous coalescing pair",
                          {"lambda": lam, "gap": gap, "next_gap": min(others)})
    energy = 0.5 * (eigs[pair[0]] + eigs[pair[1]])
    return EPLocation(lam, pair, abs(d), gap, complex(energy), eigs)


# ------------------------------------------------------------ locate

def winding_number(f: MatrixFamily, center, radius, points=64, max_points=4096) -> int:
    """Number of discriminant zeros (EPs, with multiplicity) inside a circle."""
    center = complex(center)
    while True:
        t = np.linspace(0.0, 2 * np.pi, points, endpoint=False)
        disc, ok = discriminant_batch(f, center + radius * np.exp(1j * t))
        if not ok.all():
            raise ScanUnreliableError("solver failed on the winding contour",
                                      int((~ok).sum()), ok.size)
        if np.any(disc == 0):
            raise InvalidParameterError("winding contour passes through an EP")
        steps = np.angle(np.roll(disc, -1) / disc)
        if np.max(np.abs(steps)) < np.pi / 3 or points >= max_points:
            return int(round(steps.sum() / (2 * np.pi)))
        points *= 2


def locate(f: MatrixFamily, region: SearchRegion, workers=None, _depth=0) -> list:
    """Scan plus refinement, returning the distinct EPs inside ``region``.

    Candidates are taken with the looser ``LOCATE_THRESHOLD`` because every
    one of them is verified by refinement. The scan grid is padded by one
    cell so EPs on the border are not lost. Where a winding-number check
    around a refined EP reveals more zeros than were found (several EPs
    inside one scan cell) the neighbourhood is re-scanned on a finer grid.
    """
    # one extra ring of cells so that EPs on the border rows are interior minima
    dr, di = region.steps
    padded = SearchRegion(region.re_min - dr, region.re_max + dr,
                          region.im_min - di, region.im_max + di,
                          region.grid_re + 2, region.grid_im + 2)
    found = []
    for cand in ep_scan(f, padded, workers=workers, threshold=LOCATE_THRESHOLD):
        try:
            ep = ep_refine(f, cand)
        except RefineError:
            continue
        if not region.contains(ep.lambda_c):
            continue
        if any(abs(ep.lambda_c - e.lambda_c) <= 1e-7 * (1 + abs(ep.lambda_c)) for e in found):
            continue
        found.append(ep)
    if _depth >= 3:
        return found
    radius = 2 * region.cell_diameter
    for ep in list(found):
        inside = [e for e in found if abs(e.lambda_c - ep.lambda_c) < radius]
        try:
            count = winding_number(f, ep.lambda_c, radius)
        except (ScanUnreliableError, InvalidParameterError):
            continue
        if count > len(inside):
            sub = SearchRegion.around(ep.lambda_c, 1.5 * radius, grid=32)
            for extra in locate(f, sub, workers=workers, _depth=_depth + 1):
                if not region.contains(extra.lambda_c):
                    continue
                if all(abs(extra.lambda_c - e.lambda_c) > 1e-7 * (1 + abs(extra.lambda_c))
                       for e in found):
                    found.append(extra)
    return found


# ----------------------------------------------------------- pairing

@dataclass(frozen=True)
class PairingReport:
    """Conjugate matching of an EP list.

    ``pairs`` holds index pairs ``(i, j)`` with ``lambda_j ~ conj(lambda_i)``;
    real EPs appear as ``(i, i)``. ``singletons`` are the unmatched indices.
    """

    pairs: list
    singletons: list

    @property
    def all_paired(self) -> bool:
        return not self.singletons


def conjugate_pairing_check(eps, tol=1e-8) -> PairingReport:
    """Greedily match each EP with its complex conjugate within ``tol``.

    Self-adjoint families produce EPs in conjugate pairs; unmatched entries
    signal broken symmetry, e.g. from absorption.
    """
    lams = [e.lambda_c if isinstance(e, EPLocation) else complex(e) for e in eps]
    unmatched = list(range(len(lams)))
    pairs, singles = [], []
    while unmatched:
        i = unmatched.pop(0)
        if abs(lams[i].imag) <= tol:
            pairs.append((i, i))
            continue
        target = lams[i].conjugate()
        best = min(unmatched, key=lambda j: abs(lams[j] - target), default=None)
        if best is not None and abs(lams[best] - target) <= tol:
            unmatched.remove(best)
            pairs.append((i, best))
        else:
            singles.append(i)
    return PairingReport(pairs, singles)


def family_eps(f: MatrixFamily, region: SearchRegion | None = None):
    """Closed-form EPs when ``f`` carries two-level parameters, else ``locate``."""
    if f.params is not None:
        return ep_closed_form(f.params)
    if region is None:
        raise InvalidParameterError("a search region is required for general families")
    return locate(f, region)

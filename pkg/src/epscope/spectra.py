"""Eigenvalues, eigenvectors and the spectral discriminant.

Two routes are provided. The two-level model has a closed form. General
N-level matrices (N <= 12) go through the characteristic polynomial
(Faddeev-LeVerrier) and a simultaneous Aberth-Ehrlich root iteration.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from .errors import CoalescenceError, InvalidParameterError, InvalidShiftError, SolverError
from .model import MatrixFamily, TwoLevelParams, build_general, build_two_level

__all__ = [
    "COALESCENCE_TOL",
    "EP_GAP_TOL",
    "EigenPair2",
    "PolyCoeffs",
    "Spectrum",
    "EigenVector",
    "eigenvalues_closed_form",
    "char_poly",
    "char_poly_batch",
    "poly_roots",
    "poly_roots_batch",
    "eigenvalues_general",
    "eigenvalues_batch",
    "discriminant",
    "discriminant_from_eigenvalues",
    "discriminant_batch",
    "radicand",
    "theta_angle",
    "eigenvectors_2x2",
    "eigenvector_general",
    "min_gap",
    "set_jitter_seed",
]

MAX_DIM = 12
MAX_ITER = 500
RESIDUAL_TOL = 1e-11
# |Ei - Ej| below COALESCENCE_TOL*(1 + |Ei|) counts as merged for simple
# eigenvalues; a computed double root only resolves to ~sqrt(eps), hence the
# looser gap tolerance for located EPs.
COALESCENCE_TOL = 1e-10
EP_GAP_TOL = 1e-6
# eigenvalue condition number flagged as ill-conditioned (|lambda - lambda_c| ~ 1e-8)
ILL_CONDITIONED = 1e4

_EPS = np.finfo(float).eps
_JITTER = 1e-3
_jitter_seed = 0


def set_jitter_seed(seed: int) -> None:
    """Select the seed of the Aberth starting-point jitter (default 0)."""
    global _jitter_seed
    _jitter_seed = int(seed)


@lru_cache(maxsize=None)
def _unit_start(seed: int, n: int) -> tuple:
    rng = np.random.default_rng([seed, n])
    jitter = _JITTER * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    # offset angle avoids starting exactly on the real axis
    angles = 2 * np.pi * (np.arange(n) + 0.25) / n
    return tuple(np.exp(1j * angles) * (1 + jitter))


@dataclass(frozen=True)
class EigenPair2:
    """Closed-form two-level eigenvalues ``e1, e2 = mean +- r``."""

    e1: complex
    e2: complex
    r: complex


@dataclass(frozen=True)
class PolyCoeffs:
    """Monic polynomial, coefficients highest degree first (``coeffs[0] == 1``)."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim != 1 or c.size < 2:
            raise InvalidParameterError("polynomial needs degree >= 1")
        if c[0] != 1:
            raise InvalidParameterError(f"polynomial must be monic, leading coeff {c[0]}")
        if not np.all(np.isfinite(c)):
            raise InvalidParameterError("non-finite polynomial coefficients")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, z):
        return np.polyval(self.coeffs, z)


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    residuals: np.ndarray

    def __len__(self):
        return len(self.eigenvalues)

    def __iter__(self):
        return iter(self.eigenvalues)


@dataclass(frozen=True)
class EigenVector:
    """Result of :func:`eigenvector_general`.

    ``vector`` is unit norm in the Hermitian sense. ``left`` (bilinear left
    eigenvector, ``left @ m == e * left``) and ``condition`` are only filled
    when requested.
    """

    vector: np.ndarray
    residual: float
    left: np.ndarray | None = None
    condition: float = float("nan")
    ill_conditioned: bool = False


def _check_square(m):
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidParameterError(f"expected a square matrix, got shape {m.shape}")
    return m


# ---------------------------------------------------------------- closed form

def eigenvalues_closed_form(p: TwoLevelParams, lam, sheet: int = 1) -> EigenPair2:
    """Two-level eigenvalues from the assembled matrix entries.

    ``r`` is ``sheet`` times the principal square root of
    ``((H11 - H22)/2)**2 + H12*H21``, so ``e1 - e2 == 2*r`` on either sheet.
    """
    if sheet not in (1, -1):
        raise InvalidParameterError(f"sheet must be +1 or -1, got {sheet!r}")
    h = build_two_level(p, lam)
    mean = 0.5 * (h[0, 0] + h[1, 1])
    half = 0.5 * (h[0, 0] - h[1, 1])
    r = sheet * cmath.sqrt(half * half + h[0, 1] * h[1, 0])
    return EigenPair2(complex(mean + r), complex(mean - r), complex(r))


def radicand(p: TwoLevelParams, lam) -> complex:
    """``R**2`` of the two-level model; zero exactly at its EPs."""
    h = build_two_level(p, lam)
    half = 0.5 * (h[0, 0] - h[1, 1])
    return complex(half * half + h[0, 1] * h[1, 0])


# ------------------------------------------------------ characteristic poly

def char_poly(m) -> PolyCoeffs:
    """Monic ``det(E*I - m)`` by the Faddeev-LeVerrier trace recursion."""
    m = _check_square(m)
    n = m.shape[0]
    if n < 2:
        raise InvalidParameterError(f"char_poly needs dimension >= 2, got {n}")
    if n > MAX_DIM:
        raise InvalidParameterError(f"dimension {n} exceeds supported maximum {MAX_DIM}")
    return PolyCoeffs(char_poly_batch(m[None])[0])


def char_poly_batch(ms) -> np.ndarray:
    """Faddeev-LeVerrier on a stack ``(..., n, n)``; returns ``(..., n+1)``."""
    ms = np.asarray(ms, dtype=complex)
    n = ms.shape[-1]
    coeffs = np.empty(ms.shape[:-2] + (n + 1,), dtype=complex)
    coeffs[..., 0] = 1.0
    mk = ms.copy()
    idx = np.arange(n)
    for k in range(1, n + 1):
        if k > 1:
            mk[..., idx, idx] += coeffs[..., k - 1, None]
            mk = ms @ mk
        coeffs[..., k] = -np.trace(mk, axis1=-2, axis2=-1) / k
    return coeffs


# ----------------------------------------------------------- Aberth-Ehrlich

def _cauchy_radius(abs_c):
    """Positive root of ``x**n = sum_k |c_k| x**(n-k)`` (bounds all roots)."""
    n = len(abs_c) - 1
    x = 0.0
    for k in range(1, n + 1):
        if abs_c[k]:
            x = max(x, abs_c[k] ** (1.0 / k))
    if x == 0.0:
        return 0.0
    x *= 2.0  # Fujiwara-type upper bound; Newton from above converges monotonically
    for _ in range(8):
        f, df = 1.0, 0.0
        for k in range(1, n + 1):
            df = df * x + f
            f = f * x - abs_c[k]
        if df <= 0:
            break
        step = f / df
        x -= step
        if step < 1e-3 * x:
            break
    return x


def _start_points(abs_c, n):
    rho = _cauchy_radius(abs_c)
    return [rho * u for u in _unit_start(_jitter_seed, n)]


def _aberth(c, z, maxiter=MAX_ITER):
    """In-place Gauss-Seidel Aberth iteration on plain Python complexes."""
    n = len(c) - 1
    abs_c = [abs(x) for x in c]
    round_tol = 4 * (n + 1) * _EPS
    done = [False] * n
    for _ in range(maxiter):
        pending = False
        for i in range(n):
            if done[i]:
                continue
            zi = z[i]
            azi = abs(zi)
            p, dp, bound = c[0], 0.0, abs_c[0]
            for k in range(1, n + 1):
                dp = dp * zi + p
                p = p * zi + c[k]
                bound = bound * azi + abs_c[k]
            if abs(p) <= round_tol * bound:
                done[i] = True
                continue
            s = 0.0
            for j in range(n):
                if j != i:
                    s += 1.0 / (zi - z[j])
            den = dp - p * s
            if den == 0:
                w = 1e-8 * (1 + azi)
            else:
                w = p / den
            z[i] = zi - w
            if abs(w) <= 2 * _EPS * abs(z[i]):
                done[i] = True
            else:
                pending = True
        if not pending:
            return True
    return all(done)


def _residuals(c, roots):
    n = len(c) - 1
    out = np.empty(len(roots))
    for i, r in enumerate(roots):
        p = c[0]
        for k in range(1, n + 1):
            p = p * r + c[k]
        out[i] = abs(p) / (1 + abs(r)) ** n
    return out


def _separated(z):
    scale = 1 + max(abs(x) for x in z)
    return all(abs(z[i] - z[j]) > 1e-9 * scale
               for i in range(len(z)) for j in range(i))


def poly_roots(p, initial=None) -> Spectrum:
    """All roots of a monic polynomial with multiplicity.

    Parameters
    ----------
    p : PolyCoeffs or sequence
        Monic coefficients, highest degree first.
    initial : sequence of complex, optional
        Warm-start guesses (e.g. roots at a neighbouring parameter value).
        Ignored unless pairwise distinct. Default starts are roots of unity
        scaled by the Cauchy radius with a small seeded jitter.

    Raises
    ------
    SolverError
        If the iteration has not converged after 500 sweeps.
    """
    if not isinstance(p, PolyCoeffs):
        p = PolyCoeffs(p)
    c = [complex(x) for x in p.coeffs]
    n = p.degree
    if n == 1:
        root = np.array([-c[1]])
        return Spectrum(root, _residuals(c, root))
    if initial is not None and len(initial) == n:
        z = [complex(x) for x in initial]
        if not _separated(z):
            z = _start_points([abs(x) for x in c], n)
    else:
        z = _start_points([abs(x) for x in c], n)
    ok = _aberth(c, z, MAX_ITER)
    roots = np.array(z)
    res = _residuals(c, roots)
    if not ok:
        raise SolverError(f"Aberth iteration did not converge in {MAX_ITER} sweeps "
                          f"(max residual {res.max():.3e})", roots, res)
    return Spectrum(roots, res)


def poly_roots_batch(coeffs, maxiter=MAX_ITER):
    """Vectorised Aberth-Ehrlich on a stack of monic polynomials ``(M, n+1)``.

    Returns ``(roots, residuals, converged)``; rows that fail to converge are
    flagged rather than raising, so grid scans can count them.
    """
    c = np.asarray(coeffs, dtype=complex)
    m, n = c.shape[0], c.shape[1] - 1
    abs_c = np.abs(c)
    rho = np.array([_cauchy_radius(row) for row in abs_c])
    z = rho[:, None] * np.asarray(_unit_start(_jitter_seed, n))[None, :]
    round_tol = 4 * (n + 1) * _EPS
    active = np.ones((m, n), dtype=bool)
    off_diag = ~np.eye(n, dtype=bool)
    for _ in range(maxiter):
        rows = np.nonzero(active.any(axis=1))[0]
        if rows.size == 0:
            break
        zr, cr, ar = z[rows], c[rows], abs_c[rows]
        azr = np.abs(zr)
        p = np.broadcast_to(cr[:, :1], zr.shape).copy()
        dp = np.zeros_like(zr)
        bound = np.broadcast_to(ar[:, :1], zr.shape).copy()
        for k in range(1, n + 1):
            dp = dp * zr + p
            p = p * zr + cr[:, k:k + 1]
            bound = bound * azr + ar[:, k:k + 1]
        at_round = np.abs(p) <= round_tol * bound
        diff = zr[:, :, None] - zr[:, None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = np.where(off_diag, 1.0 / np.where(off_diag, diff, 1.0), 0.0)
            s = inv.sum(axis=2)
            den = dp - p * s
            w = np.where(den != 0, p / den, 1e-8 * (1 + azr))
        act = active[rows] & ~at_round
        w = np.where(act, w, 0.0)
        znew = zr - w
        small = np.abs(w) <= 2 * _EPS * np.abs(znew)
        z[rows] = znew
        active[rows] = act & ~small
    # residuals |p(z)| / (1 + |z|)^n
    p = np.broadcast_to(c[:, :1], z.shape).copy()
    for k in range(1, n + 1):
        p = p * z + c[:, k:k + 1]
    residuals = np.abs(p) / (1 + np.abs(z)) ** n
    converged = ~active.any(axis=1) & np.all(np.isfinite(z), axis=1)
    return z, residuals, converged


# ----------------------------------------------------------- general spectra

def eigenvalues_general(m, initial=None) -> Spectrum:
    """Full spectrum of a small dense matrix via ``char_poly`` and ``poly_roots``."""
    return poly_roots(char_poly(m), initial=initial)


def eigenvalues_batch(ms):
    """Spectra of a stack of matrices; returns ``(eigs, residuals, converged)``."""
    ms = np.asarray(ms, dtype=complex)
    shape = ms.shape[:-2]
    n = ms.shape[-1]
    flat = ms.reshape((-1, n, n))
    roots, res, ok = poly_roots_batch(char_poly_batch(flat))
    return roots.reshape(shape + (n,)), res.reshape(shape + (n,)), ok.reshape(shape)


def discriminant_from_eigenvalues(eigs) -> complex:
    """``prod_{i<j} (Ei - Ej)**2``; works on the last axis of an array too."""
    e = np.asarray(eigs)
    n = e.shape[-1]
    out = np.ones(e.shape[:-1], dtype=complex)
    for i in range(n):
        for j in range(i + 1, n):
            d = e[..., i] - e[..., j]
            out = out * d * d
    return out if out.shape else complex(out)


def discriminant(f: MatrixFamily, lam) -> complex:
    """Spectral discriminant of ``f`` at ``lam``; vanishes at coalescences."""
    return discriminant_from_eigenvalues(eigenvalues_general(build_general(f, lam)).eigenvalues)


def discriminant_batch(f: MatrixFamily, lams):
    """Discriminant on an array of lambda values; NaN where the solver failed."""
    lams = np.asarray(lams, dtype=complex)
    ms = f.constant[None] + lams.reshape(-1)[:, None, None] * f.h1[None]
    eigs, _, ok = eigenvalues_batch(ms)
    disc = discriminant_from_eigenvalues(eigs)
    disc = np.where(ok, disc, np.nan)
    return disc.reshape(lams.shape), ok.reshape(lams.shape)


def min_gap(eigs):
    """Smallest pairwise distance within a spectrum, with the argmin pair."""
    e = np.asarray(eigs)
    best, pair = math.inf, (0, 1)
    for i in range(len(e)):
        for j in range(i + 1, len(e)):
            d = abs(e[i] - e[j])
            if d < best:
                best, pair = d, (i, j)
    return best, pair


# ------------------------------------------------------------- eigenvectors

def theta_angle(p: TwoLevelParams, lam, sheet: int = 1) -> complex:
    """Complex mixing angle of the two-level eigenvectors.

    ``(cos t, sin t)`` is the eigenvector of ``e1`` on the given sheet, with
    ``tan t = H12 / (r + (H11 - H22)/2)``. The principal arctan branch is
    returned (real part in ``(-pi/2, pi/2]``); callers that need continuity
    along a path must unwrap by multiples of pi.

    Where the ratio has a 0/0 form away from an EP (``H12 = 0`` and
    ``r = -(H11 - H22)/2``) the equivalent form ``(r - (H11 - H22)/2) / H12``
    is used, which yields the pole representative ``pi/2``.

    Raises
    ------
    CoalescenceError
        At an EP (``r == 0``), where the angle diverges.
    """
    if sheet not in (1, -1):
        raise InvalidParameterError(f"sheet must be +1 or -1, got {sheet!r}")
    h = build_two_level(p, lam)
    mean = 0.5 * (h[0, 0] + h[1, 1])
    z = 0.5 * (h[0, 0] - h[1, 1])
    x = complex(h[0, 1])
    r = sheet * cmath.sqrt(z * z + x * x)
    if abs(r) < COALESCENCE_TOL * (1 + abs(mean)):
        raise CoalescenceError(f"levels coalesce at lambda={complex(lam)} (|R|={abs(r):.2e})")
    plus, minus = r + z, r - z
    # |plus| * |minus| = |x|**2, so the larger factor keeps the ratio bounded by 1
    if abs(plus) >= abs(minus):
        theta = cmath.atan(x / plus)
    else:
        theta = math.pi / 2 - cmath.atan(x / minus)
    if theta.real > math.pi / 2:
        theta -= math.pi
    return complex(theta)


def eigenvectors_2x2(p: TwoLevelParams, lam, sheet: int = 1):
    """``psi1 = (cos t, sin t)`` for ``e1`` and ``psi2 = (-sin t, cos t)`` for ``e2``.

    The vectors are normalised in the bilinear sense (``psi @ psi == 1``).
    """
    theta = theta_angle(p, lam, sheet)
    c, s = cmath.cos(theta), cmath.sin(theta)
    return np.array([c, s]), np.array([-s, c])


@lru_cache(maxsize=None)
def _start_vector(n: int) -> np.ndarray:
    rng = np.random.default_rng([7, n])
    b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    b /= np.linalg.norm(b)
    b.setflags(write=False)
    return b


def _null_vector_2x2(p, q, r, s):
    """Unit vector annihilated by ``[[p, q], [r, s]]`` (rank one assumed)."""
    u = (q, -p) if abs(p) + abs(q) >= abs(r) + abs(s) else (s, -r)
    norm = math.hypot(abs(u[0]), abs(u[1]))
    if norm == 0:
        # the shifted matrix vanishes: every vector is an eigenvector
        return complex(1), complex(0)
    return u[0] / norm, u[1] / norm


def _eigenvector_2x2(m, e, condition):
    a, b, c, d = (complex(x) for x in m.ravel())
    scale = 1.0 + max(abs(a) + abs(b), abs(c) + abs(d))
    v0, v1 = _null_vector_2x2(a - e, b, c, d - e)
    r0, r1 = (a - e) * v0 + b * v1, c * v0 + (d - e) * v1
    residual = math.hypot(abs(r0), abs(r1))
    if residual > 1e-6 * scale:
        raise InvalidShiftError(
            f"e={e} is not an eigenvalue of the matrix (residual {residual:.2e})")
    v = np.array([v0, v1])
    if not condition:
        return EigenVector(v, residual)
    # left vector: null vector of the transpose, returned in the bilinear convention
    l0, l1 = _null_vector_2x2(a - e, c, b, d - e)
    left = np.array([l0, l1])
    overlap = abs(l0 * v0 + l1 * v1)
    kappa = math.inf if overlap == 0 else 1.0 / overlap
    return EigenVector(v, residual, left=left, condition=kappa, ill_conditioned=kappa > ILL_CONDITIONED)


def eigenvector_general(m, e, condition: bool = False) -> EigenVector:
    """Right eigenvector for a computed eigenvalue ``e`` by one inverse-iteration step.

    The shift is offset from ``e`` by ``1e-10`` of the matrix scale so the
    shifted system stays solvable when ``e`` is exact. With
    ``condition=True`` the left eigenvector is obtained from the same LU
    factorisation and the eigenvalue condition number ``1/|l^H r|`` is
    reported; values above ``ILL_CONDITIONED`` mark the EP vicinity, where
    ``kappa`` grows like ``|lambda - lambda_c|**-0.5``.

    Raises
    ------
    InvalidShiftError
        If the residual shows ``e`` is not an eigenvalue of ``m``.
    """
    m = _check_square(m)
    n = m.shape[0]
    e = complex(e)
    if n == 2:
        return _eigenvector_2x2(m, e, condition)
    scale = 1.0 + np.abs(m).sum(axis=1).max()
    sigma = e + 1e-10 * scale * (1 + 1j) / math.sqrt(2)
    shifted = m - sigma * np.eye(n)
    b = _start_vector(n)
    if condition:
        lu = scipy.linalg.lu_factor(shifted, check_finite=False)
        x = scipy.linalg.lu_solve(lu, b, check_finite=False)
    else:
        x = np.linalg.solve(shifted, b)
    nx = np.linalg.norm(x)
    if not np.isfinite(nx) or nx == 0:
        raise InvalidShiftError(f"inverse iteration broke down at e={e}")
    v = x / nx
    residual = float(np.linalg.norm(m @ v - e * v))
    if residual > 1e-6 * scale:
        raise InvalidShiftError(
            f"e={e} is not an eigenvalue of the matrix (residual {residual:.2e})")
    if not condition:
        return EigenVector(v, residual)
    y = scipy.linalg.lu_solve(lu, b, trans=2, check_finite=False)
    u = y / np.linalg.norm(y)
    overlap = abs(np.vdot(u, v))
    kappa = math.inf if overlap == 0 else 1.0 / overlap
    return EigenVector(v, residual, left=u.conj(), condition=kappa,
                       ill_conditioned=kappa > ILL_CONDITIONED)

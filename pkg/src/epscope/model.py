"""Hamiltonian families H(lambda) = H0 + lambda*H1 - i*mu*A.

Two constructors are provided: the rotated two-level model, with its
optional absorptive term, and a general dense N-level family. Matrices
are plain ``complex128`` numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidFamilyError, InvalidParameterError

__all__ = [
    "TwoLevelParams",
    "MatrixFamily",
    "rotation_matrix",
    "build_two_level",
    "build_general",
    "two_level_family",
    "resonator_params",
    "direct_sum",
]


def _finite(name, value):
    if not np.isfinite(value):
        raise InvalidParameterError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class TwoLevelParams:
    """Parameters of the rotated two-level model.

    ``eps1``/``eps2`` may be complex (``E - i*Gamma/2``). ``mu`` scales the
    absorptive term ``-i*mu*U(phi2) diag(sigma1, sigma2) U(phi2)^T``; with
    ``mu = 0`` the model is the plain ``H0 + lambda*H1`` pair.
    """

    eps1: complex = 1.0
    eps2: complex = 2.0
    omega1: float = 1.0
    omega2: float = -1.0
    phi1: float = 0.2
    mu: float = 0.0
    sigma1: float = 1.0
    sigma2: float = 0.0
    phi2: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "eps1", complex(self.eps1))
        object.__setattr__(self, "eps2", complex(self.eps2))
        for name in ("omega1", "omega2", "phi1", "mu", "sigma1", "sigma2", "phi2"):
            value = getattr(self, name)
            if isinstance(value, complex):
                raise InvalidParameterError(f"{name} must be real, got {value!r}")
            object.__setattr__(self, name, float(value))
        for name in ("eps1", "eps2", "omega1", "omega2", "phi1", "mu",
                     "sigma1", "sigma2", "phi2"):
            _finite(name, getattr(self, name))
        if self.mu < 0:
            raise InvalidParameterError(f"mu must be >= 0, got {self.mu}")

    def replace(self, **changes) -> "TwoLevelParams":
        kwargs = {k: getattr(self, k) for k in self.__dataclass_fields__}
        kwargs.update(changes)
        return TwoLevelParams(**kwargs)


@dataclass(frozen=True)
class MatrixFamily:
    """Linear family ``H(lambda) = h0 + lambda*h1 - 1j*mu*a``."""

    h0: np.ndarray
    h1: np.ndarray
    a: np.ndarray = None
    mu: float = 0.0
    # retained when the family was assembled from two-level parameters
    params: TwoLevelParams | None = field(default=None, compare=False)

    def __post_init__(self):
        h0 = np.array(self.h0, dtype=complex)
        h1 = np.array(self.h1, dtype=complex)
        a = np.zeros_like(h0) if self.a is None else np.array(self.a, dtype=complex)
        if h0.ndim != 2 or h0.shape[0] != h0.shape[1]:
            raise InvalidFamilyError(f"h0 must be square, got shape {h0.shape}")
        if h1.shape != h0.shape or a.shape != h0.shape:
            raise InvalidFamilyError(
                f"dimension mismatch: h0 {h0.shape}, h1 {h1.shape}, a {a.shape}")
        if h0.shape[0] < 1:
            raise InvalidFamilyError("empty matrices")
        for name, m in (("h0", h0), ("h1", h1), ("a", a)):
            if not np.all(np.isfinite(m)):
                raise InvalidFamilyError(f"{name} has non-finite entries")
            m.setflags(write=False)
        mu = float(self.mu)
        if not math.isfinite(mu) or mu < 0:
            raise InvalidFamilyError(f"mu must be finite and >= 0, got {self.mu}")
        object.__setattr__(self, "h0", h0)
        object.__setattr__(self, "h1", h1)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "mu", mu)

    @property
    def n(self) -> int:
        return self.h0.shape[0]

    @property
    def constant(self) -> np.ndarray:
        """The lambda-independent part ``h0 - i*mu*a``."""
        return self.h0 - 1j * self.mu * self.a

    def __call__(self, lam) -> np.ndarray:
        return build_general(self, lam)

    def is_symmetric(self, tol=0.0) -> bool:
        """True when H(lambda) is complex symmetric for every lambda."""
        return all(np.max(np.abs(m - m.T), initial=0.0) <= tol
                   for m in (self.h0, self.h1, self.a))

    def is_real(self) -> bool:
        return self.mu == 0 and not np.any(self.h0.imag) and not np.any(self.h1.imag)


def rotation_matrix(phi):
    """Real 2x2 rotation ``[[cos, -sin], [sin, cos]]`` as a complex array."""
    if not np.isfinite(phi):
        raise InvalidParameterError(f"phi must be finite, got {phi!r}")
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _rotated_diag(phi, d1, d2):
    u = rotation_matrix(phi)
    return u @ np.diag([d1, d2]).astype(complex) @ u.T


def two_level_family(p: TwoLevelParams) -> MatrixFamily:
    """Express the two-level model as a general :class:`MatrixFamily`."""
    return MatrixFamily(
        h0=np.diag([p.eps1, p.eps2]),
        h1=_rotated_diag(p.phi1, p.omega1, p.omega2),
        a=_rotated_diag(p.phi2, p.sigma1, p.sigma2),
        mu=p.mu,
        params=p,
    )


def build_two_level(p: TwoLevelParams, lam) -> np.ndarray:
    """Assemble the 2x2 matrix of the two-level model at (complex) ``lam``."""
    lam = complex(lam)
    c1, s1 = math.cos(2 * p.phi1), math.sin(2 * p.phi1)
    c2, s2 = math.cos(2 * p.phi2), math.sin(2 * p.phi2)
    # U diag(d1, d2) U^T = (d1+d2)/2 I + (d1-d2)/2 [[cos 2phi, sin 2phi], [sin 2phi, -cos 2phi]]
    wm, wd = 0.5 * (p.omega1 + p.omega2), 0.5 * (p.omega1 - p.omega2)
    sm, sd = 0.5 * (p.sigma1 + p.sigma2), 0.5 * (p.sigma1 - p.sigma2)
    g = -1j * p.mu
    off = lam * wd * s1 + g * sd * s2
    h = np.empty((2, 2), dtype=complex)
    h[0, 0] = p.eps1 + lam * (wm + wd * c1) + g * (sm + sd * c2)
    h[1, 1] = p.eps2 + lam * (wm - wd * c1) + g * (sm - sd * c2)
    h[0, 1] = h[1, 0] = off
    return h


def build_general(f: MatrixFamily, lam) -> np.ndarray:
    """Evaluate ``h0 + lam*h1 - 1j*mu*a`` entrywise."""
    if not isinstance(f, MatrixFamily):
        raise InvalidFamilyError(f"expected MatrixFamily, got {type(f).__name__}")
    return f.h0 + complex(lam) * f.h1 - 1j * f.mu * f.a


def resonator_params(deltaE, gamma1, gamma2, x) -> MatrixFamily:
    """Two coupled resonators, the first one detuned by ``lambda``.

    ``H(lambda) = [[eps1 + lambda, x], [x, eps2]]`` with
    ``eps1 = deltaE - i*gamma1/2`` and ``eps2 = -i*gamma2/2``. Its EPs sit at
    ``lambda_c = -deltaE + i*(gamma1 - gamma2)/2 +- 2i*x``.
    """
    for name, v in (("deltaE", deltaE), ("gamma1", gamma1), ("gamma2", gamma2), ("x", x)):
        _finite(name, v)
    if gamma1 < 0 or gamma2 < 0:
        raise InvalidParameterError(
            f"widths must be non-negative, got gamma1={gamma1}, gamma2={gamma2}")
    eps1 = deltaE - 0.5j * gamma1
    eps2 = -0.5j * gamma2
    return MatrixFamily(
        h0=np.array([[eps1, x], [x, eps2]], dtype=complex),
        h1=np.array([[1, 0], [0, 0]], dtype=complex),
        a=np.zeros((2, 2), dtype=complex),
        mu=0.0,
    )


def resonator_eps(deltaE, gamma1, gamma2, x):
    """Closed-form EP pair of :func:`resonator_params`."""
    center = -deltaE + 0.5j * (gamma1 - gamma2)
    return center + 2j * x, center - 2j * x


def direct_sum(*families: MatrixFamily) -> MatrixFamily:
    """Block-diagonal combination of independent families.

    The absorption of each block is folded into ``a`` so that blocks with
    different ``mu`` can be combined.
    """
    from scipy.linalg import block_diag

    return MatrixFamily(
        h0=block_diag(*(f.h0 for f in families)),
        h1=block_diag(*(f.h1 for f in families)),
        a=block_diag(*(f.mu * f.a for f in families)),
        mu=1.0 if any(f.mu for f in families) else 0.0,
    )

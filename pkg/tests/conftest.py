import math

import numpy as np
import pytest

from epscope import TwoLevelParams, ep_closed_form

# reference two-level parameters; the dataclass defaults encode them
MU_TOP = 0.35
MU_BOTTOM = 0.5
MU_REAL_EP = math.tan(0.4)
EP_MU0 = 0.5 * complex(math.cos(0.4), math.sin(0.4))


def fig1(mu=0.0):
    return TwoLevelParams(eps1=1, eps2=2, omega1=1, omega2=-1, phi1=0.2,
                          mu=mu, sigma1=1, sigma2=0, phi2=0)


def set_distance(a, b):
    """Max over elements of the distance to the nearest element of the other set."""
    a, b = np.asarray(a), np.asarray(b)
    d = np.abs(a[:, None] - b[None, :])
    return max(d.min(axis=1).max(), d.min(axis=0).max())


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)


def random_two_level(rng, **fixed):
    """Random two-level parameters with well separated energies and slopes."""
    def mag():
        return rng.uniform(0.5, 3) * rng.choice([-1, 1])

    while True:
        values = dict(eps1=mag(), eps2=mag(), omega1=mag(), omega2=mag(),
                      phi1=rng.uniform(0.05, math.pi / 2 - 0.05), mu=rng.uniform(0, 1),
                      sigma1=rng.uniform(0, 1), sigma2=rng.uniform(0, 1),
                      phi2=rng.uniform(0, math.pi / 2))
        values.update(fixed)
        p = TwoLevelParams(**values)
        if abs(p.omega1 - p.omega2) > 0.1 and abs(p.eps1 - p.eps2) > 0.1:
            return p


def duality_family(rng, offset=0.03):
    """Random family plus two absorption strengths on either side of a real EP.

    For fixed signs the closed-form EP is affine in mu, so the mu that puts
    it on the real axis is explicit. Returns ``(p_below, p_above, lam_real)``
    where the EP has ``Im = -offset`` for ``p_below`` and ``+offset`` for
    ``p_above``; the other EP stays clear of the real axis.
    """
    while True:
        p = random_two_level(rng)
        dw, de, ds = p.omega1 - p.omega2, p.eps1 - p.eps2, p.sigma1 - p.sigma2
        if abs(ds) < 0.2:
            continue
        for s1 in (1, -1):
            s2 = -s1
            a = -de * np.exp(2j * s1 * p.phi1) / dw
            b = 1j * ds * np.exp(2j * (s1 * p.phi1 + s2 * p.phi2)) / dw
            if abs(b.imag) < 0.2:
                continue
            mu_star = -a.imag / b.imag
            dmu = offset / abs(b.imag)
            if not (0.1 < mu_star - dmu and mu_star + dmu < 3):
                continue
            lam_real = (a + mu_star * b).real
            sides = sorted((p.replace(mu=mu_star - dmu), p.replace(mu=mu_star + dmu)),
                           key=lambda q: (a + q.mu * b).imag)
            clear = all(
                min(abs(e.lambda_c.imag) for e in ep_closed_form(q)
                    if abs(e.lambda_c - (a + q.mu * b)) > 1e-9) > 0.3
                for q in sides)
            if clear:
                return sides[0], sides[1], lam_real


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

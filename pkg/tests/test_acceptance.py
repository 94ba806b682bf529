"""Acceptance criteria 1-10, each checked at its tolerance and runtime budget."""
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from epscope import (
    CrossingKind,
    MatrixFamily,
    LoopSpec,
    SearchRegion,
    classify_crossing,
    conjugate_pairing_check,
    crossing_angle_at_ep,
    discriminant,
    eigenvalues_closed_form,
    eigenvalues_general,
    encircle,
    ep_candidates,
    ep_closed_form,
    locate,
    sheet_of,
    sweep_real,
    theta_sweep,
    two_level_family,
)
from epscope.model import build_two_level
from epscope.spectra import eigenvalues_batch

from conftest import (
    ACCEPTANCE_LINES,
    EP_MU0,
    MU_BOTTOM,
    MU_REAL_EP,
    MU_TOP,
    duality_family,
    fig1,
    random_two_level,
    set_distance,
)


@contextmanager
def criterion(number, budget):
    """Time the block; record PASS only if it completes within ``budget`` seconds."""
    start = time.perf_counter()
    passed = False
    try:
        yield
        elapsed = time.perf_counter() - start
        assert elapsed < budget, f"runtime {elapsed:.3f} s exceeds {budget} s"
        passed = True
    finally:
        elapsed = time.perf_counter() - start
        line = (f"criterion {number}: {'PASS' if passed else 'FAIL'} "
                f"({elapsed:.3f} s, budget {budget} s)")
        ACCEPTANCE_LINES.append(line)
        print(line)


def mod_pi_distance(a, b):
    d = complex(a - b)
    return abs(complex((d.real + math.pi / 2) % math.pi - math.pi / 2, d.imag))


def test_c1_fig1_top():
    with criterion(1, 1.0):
        t = sweep_real(two_level_family(fig1(MU_TOP)), 0, 1, 200)
        assert classify_crossing(t).kind is CrossingKind.RE_AVOID_IM_CROSS


def test_c2_fig1_bottom():
    with criterion(2, 1.0):
        f_top, f_bot = two_level_family(fig1(MU_TOP)), two_level_family(fig1(MU_BOTTOM))
        top = classify_crossing(sweep_real(f_top, 0, 1, 200))
        bottom = classify_crossing(sweep_real(f_bot, 0, 1, 200))
        assert bottom.kind is CrossingKind.RE_CROSS_IM_AVOID
        assert top.nearest_ep.lambda_c.imag < 0 < bottom.nearest_ep.lambda_c.imag


def test_c3_closed_form_vs_numeric():
    f = two_level_family(fig1())
    with criterion(3, 5.0):
        eps = locate(f, SearchRegion(-1, 1, -1, 1, 128, 128))
        found = [e.lambda_c for e in eps]
        assert len(found) == 2
        assert set_distance(found, [EP_MU0, EP_MU0.conjugate()]) < 1e-8
        for z in found:
            assert abs(discriminant(f, z)) < 1e-10


def test_c4_sign_filter(rng):
    draws = [fig1(MU_TOP), fig1(MU_BOTTOM)] + [random_two_level(rng) for _ in range(20)]
    with criterion(4, 1.0):
        for p in draws:
            f = two_level_family(p)
            passing = [c for c in ep_candidates(p) if c[2] < 1e-10]
            assert len(passing) >= 2
            for lam, _, _ in passing:
                # verified independently with the general solver
                scale = (1 + abs(lam)) ** 2
                assert abs(discriminant(f, lam)) < 1e-10 * scale


def test_c5_real_ep_right_angle():
    f = two_level_family(fig1(MU_REAL_EP))
    with criterion(5, 1.0):
        c = classify_crossing(sweep_real(f, 0, 1, 200))
        assert c.kind is CrossingKind.BOTH_CROSS_AT_EP
        assert abs(crossing_angle_at_ep(f, 0.5 / math.cos(0.4)) - 90) < 1


def test_c6_theta_asymptotics():
    lams = np.linspace(0, 100, 2001)
    with criterion(6, 0.1):
        results = {}
        for mu in (MU_TOP, MU_BOTTOM):
            p = fig1(mu)
            sheet = sheet_of(p, 0.0, build_two_level(p, 0.0)[0, 0])
            th = theta_sweep(p, lams, sheet=sheet)
            assert th[0] == 0
            results[mu] = th[-1]
        assert abs(results[MU_TOP] - 0.2) < 1e-2, results
        assert mod_pi_distance(results[MU_BOTTOM], 0.2 + math.pi / 2) < 1e-2, results


def test_c7_monodromy_period():
    f = two_level_family(fig1())
    with criterion(7, 10.0):
        one = encircle(f, LoopSpec(EP_MU0, 0.1, steps=4096, loops=1))
        assert one.permutation == (1, 0)
        signs = sorted(z.real for z in one.phases)
        assert abs(signs[0] + 1) < 1e-3 and abs(signs[1] - 1) < 1e-3
        for loops, expected in ((2, -1), (4, 1)):
            res = encircle(f, LoopSpec(EP_MU0, 0.1, steps=4096, loops=loops))
            assert res.permutation == (0, 1)
            assert all(abs(z - expected) < 1e-3 for z in res.phases)


def test_c8_solver_cross_validation(rng):
    with criterion(8, 30.0):
        for k in range(1000):
            p = fig1(MU_TOP) if k % 2 else random_two_level(rng)
            lam = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
            cf = eigenvalues_closed_form(p, lam)
            gen = eigenvalues_general(build_two_level(p, lam)).eigenvalues
            assert set_distance([cf.e1, cf.e2], gen) < 1e-10
        worst_tr = worst_det = 0.0
        for n in range(1, 9):
            ms = rng.standard_normal((1250, n, n)) + 1j * rng.standard_normal((1250, n, n))
            eigs, _, ok = eigenvalues_batch(ms)
            assert ok.all()
            tr = np.trace(ms, axis1=1, axis2=2)
            det = np.linalg.det(ms)
            tr_scale = np.maximum(np.abs(tr), np.abs(eigs).sum(axis=1))
            det_scale = np.maximum(np.abs(det), np.prod(np.abs(eigs), axis=1))
            worst_tr = max(worst_tr, float(np.max(np.abs(eigs.sum(axis=1) - tr) / tr_scale)))
            worst_det = max(worst_det, float(np.max(np.abs(np.prod(eigs, axis=1) - det)
                                                    / det_scale)))
        assert worst_tr < 1e-9 and worst_det < 1e-9, (worst_tr, worst_det)


def test_c9_conjugate_symmetry(rng):
    def sym(n):
        m = rng.standard_normal((n, n))
        return (m + m.T) / 2

    region = SearchRegion(-6, 6, -6, 6, 64, 64)
    with criterion(9, 60.0):
        broken = 0
        for _ in range(20):
            h0, h1 = sym(4), sym(4)
            eps = locate(MatrixFamily(h0, h1), region)
            assert eps
            assert conjugate_pairing_check(eps).all_paired
            sigma = np.diag(rng.uniform(0, 1, 4))
            absorbing = MatrixFamily(h0, h1, sigma, mu=rng.uniform(0.2, 1))
            broken += not conjugate_pairing_check(locate(absorbing, region)).all_paired
        assert broken >= 16


def test_c10_crossing_duality(rng):
    with criterion(10, 30.0):
        for _ in range(50):
            below, above, lam_real = duality_family(rng)
            kinds = []
            for q in (below, above):
                eps = ep_closed_form(q)
                near = min(eps, key=lambda e: abs(e.lambda_c - lam_real))
                assert 0 < abs(near.lambda_c.imag) < 0.1
                t = sweep_real(two_level_family(q), lam_real - 0.5, lam_real + 0.5, 200)
                kinds.append(classify_crossing(t).kind)
            assert CrossingKind.BOTH_CROSS_AT_EP not in kinds
            assert kinds[0] != kinds[1]

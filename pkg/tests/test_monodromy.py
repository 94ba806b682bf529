import cmath
import math

import numpy as np
import pytest

from epscope import (
    EPLocation,
    GaugeBreakdownError,
    InvalidParameterError,
    LoopSpec,
    LoopThroughEPError,
    MatrixFamily,
    RefineError,
    direct_sum,
    encircle,
    ep_closed_form,
    ep_refine,
    gauge_align,
    sheet_swap_check,
    two_level_family,
)

from conftest import EP_MU0, fig1, random_two_level

F0 = two_level_family(fig1())


def assert_phases(res, expected, tol=1e-3):
    for z, e in zip(res.phases, expected):
        assert abs(z - e) < tol, res.phases


# --- gauge_align -------------------------------------------------------------

def test_gauge_align_examples():
    prev = np.array([0.6, 0.8j])
    assert np.allclose(gauge_align(prev, 1j * prev), prev)
    assert np.allclose(gauge_align(prev, 2 * prev), prev)
    with pytest.raises(GaugeBreakdownError):
        gauge_align(np.array([1, 0]), np.array([0, 1]))


def test_gauge_align_overlap_real_positive(rng):
    for _ in range(50):
        prev = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        prev /= np.linalg.norm(prev)
        raw = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        out = gauge_align(prev, raw)
        ov = np.vdot(prev, out)
        assert abs(ov.imag) < 1e-12 and ov.real > 0
        assert np.linalg.norm(out) == pytest.approx(1)


# --- LoopSpec ----------------------------------------------------------------

@pytest.mark.parametrize("kw", [
    dict(radius=0), dict(radius=-1), dict(steps=32), dict(loops=0),
    dict(orientation=2), dict(steps=100.5), dict(center=complex("nan")),
])
def test_loopspec_validation(kw):
    args = dict(center=0.5, radius=0.1)
    args.update(kw)
    with pytest.raises(InvalidParameterError):
        LoopSpec(**args)


def test_loopspec_points():
    s = LoopSpec(1 + 1j, 0.5, start_angle=math.pi / 2)
    assert s.base_point == pytest.approx(1 + 1.5j)
    assert s.point(0.25) == pytest.approx(0.5 + 1j)


# --- encircle examples -------------------------------------------------------

def test_one_loop_swaps_with_one_sign_flip():
    res = encircle(F0, LoopSpec(EP_MU0, 0.1, steps=4096))
    assert res.permutation == (1, 0)
    assert sorted(round(z.real) for z in res.phases) == [-1, 1]
    assert all(abs(z.imag) < 1e-3 for z in res.phases)
    assert all(abs(abs(z) - 1) < 1e-6 for z in res.phases)


@pytest.mark.parametrize("loops, expected", [(2, -1), (4, 1)])
def test_multiple_loops(loops, expected):
    res = encircle(F0, LoopSpec(EP_MU0, 0.1, steps=4096, loops=loops))
    assert res.permutation == (0, 1)
    assert_phases(res, [expected, expected])


def test_contractible_loop():
    res = encircle(F0, LoopSpec(0, 0.1, steps=1024))
    assert res.permutation == (0, 1)
    assert_phases(res, [1, 1])


def test_loops_equal_repeated_single_loop():
    one = encircle(F0, LoopSpec(EP_MU0, 0.1, steps=2048))
    two = encircle(F0, LoopSpec(EP_MU0, 0.1, steps=2048, loops=2))
    composed = one.then(one)
    assert composed.permutation == two.permutation
    assert_phases(two, composed.phases, 1e-6)


def test_radius_independence():
    perms = {encircle(F0, LoopSpec(EP_MU0, r, steps=1024)).permutation
             for r in (0.02, 0.05, 0.1)}
    assert perms == {(1, 0)}


def test_orientation_inverts_holonomy():
    ccw = encircle(F0, LoopSpec(EP_MU0, 0.1, steps=2048))
    cw = encircle(F0, LoopSpec(EP_MU0, 0.1, steps=2048, orientation=-1))
    inverse = [0] * 2
    for k, j in enumerate(ccw.permutation):
        inverse[j] = k
    assert list(cw.permutation) == inverse
    for k, j in enumerate(ccw.permutation):
        # transported k returns as phase*initial j; inverse walk maps j back to k
        assert abs(cw.phases[j] - ccw.phases[k].conjugate()) < 1e-3


def test_period_four_for_random_eps(rng):
    done = 0
    while done < 3:
        p = random_two_level(rng)
        eps = ep_closed_form(p)
        if len(eps) != 2:
            continue
        lc = eps[0].lambda_c
        r = 0.2 * abs(eps[0].lambda_c - eps[1].lambda_c)
        f = two_level_family(p)
        two = encircle(f, LoopSpec(lc, r, steps=2048, loops=2))
        four = encircle(f, LoopSpec(lc, r, steps=2048, loops=4))
        assert two.permutation == four.permutation == (0, 1)
        assert_phases(two, [-1, -1])
        assert_phases(four, [1, 1])
        done += 1


def test_period_four_non_symmetric_three_level(rng):
    # generic complex 3x3 family: refine one EP and loop around it
    while True:
        f = MatrixFamily(rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)),
                         rng.standard_normal((3, 3)))
        try:
            ep = ep_refine(f, rng.standard_normal() + 1j * rng.standard_normal())
        except RefineError:
            continue
        break
    two = encircle(f, LoopSpec(ep.lambda_c, 0.01, steps=2048, loops=2))
    assert two.permutation == (0, 1, 2)
    assert_phases(two, [-1 if k in ep_pair_labels(f, ep, 0.01) else 1 for k in range(3)])


def ep_pair_labels(f, ep, radius):
    from epscope.spectra import eigenvalues_general
    from epscope.tracking import initial_order
    start = initial_order(eigenvalues_general(f(ep.lambda_c + radius)).eigenvalues)
    return set(int(k) for k in np.argsort(np.abs(start - ep.energy))[:2])


def test_discretization_convergence():
    ref = encircle(F0, LoopSpec(EP_MU0, 0.1, steps=16384))
    bi = [encircle(F0, LoopSpec(EP_MU0, 0.1, steps=s)) for s in (1024, 2048)]
    for res in bi:
        err = max(abs(a - b) for a, b in zip(res.phases, ref.phases))
        assert err < 1e-10
    # the Hermitian gauge converges (to a non-quantised value) at first order or better
    href = encircle(F0, LoopSpec(EP_MU0, 0.1, steps=16384), gauge="hermitian")
    errs = []
    for s in (1024, 2048):
        res = encircle(F0, LoopSpec(EP_MU0, 0.1, steps=s), gauge="hermitian")
        errs.append(max(abs(a - b) for a, b in zip(res.phases, href.phases)))
    assert errs[0] / errs[1] >= 2


def test_hermitian_gauge_is_not_quantised():
    res = encircle(F0, LoopSpec(EP_MU0, 0.1, steps=4096, loops=2), gauge="hermitian")
    assert res.permutation == (0, 1)
    assert max(abs(z + 1) for z in res.phases) > 1e-2


def test_composition_of_two_eps():
    # both mu=0 EPs connect levels 0 and 1; a common base point on the real axis
    base = 0.76
    up, down = EP_MU0, EP_MU0.conjugate()
    r_up = abs(base - up)
    upper = encircle(F0, LoopSpec(up, r_up, steps=4096,
                                  start_angle=cmath.phase(base - up)))
    lower = encircle(F0, LoopSpec(down, r_up, steps=4096,
                                  start_angle=cmath.phase(base - down)))
    assert upper.permutation == lower.permutation == (1, 0)
    composed = upper.then(lower)
    assert composed.permutation == (0, 1)
    big = encircle(F0, LoopSpec(0.46, 0.3, steps=4096, start_angle=0.0))
    assert big.permutation == (0, 1)
    assert max(abs(a - b) for a, b in zip(big.phases, composed.phases)) < 1e-2


def test_loop_through_ep_is_rejected():
    with pytest.raises(LoopThroughEPError) as info:
        encircle(F0, LoopSpec(EP_MU0 - 0.1, 0.1))
    assert info.value.suggested_radii
    # unknown EP (no closed form available): the gap check catches it
    f = MatrixFamily(F0.h0, F0.h1)
    with pytest.raises(LoopThroughEPError):
        encircle(f, LoopSpec(EP_MU0 - 0.1, 0.1, steps=256))


def test_invalid_gauge():
    with pytest.raises(InvalidParameterError):
        encircle(F0, LoopSpec(0, 0.1), gauge="berry")


def test_result_fields():
    res = encircle(F0, LoopSpec(EP_MU0, 0.1, steps=512))
    assert res.points >= 513 and res.min_gap > 0
    assert res.discretization_error >= 0 and res.gauge == "biorthogonal"
    assert sorted(res.permutation) == [0, 1]


# --- sheet_swap_check --------------------------------------------------------

def test_sheet_swap_fig1():
    for ep in ep_closed_form(fig1()):
        assert sheet_swap_check(F0, ep)


def test_sheet_swap_regular_point():
    fake = EPLocation(0.0, (0, 1), 0.0, 1.0, 1.5)
    assert not sheet_swap_check(F0, fake, radius=0.1)


def test_sheet_swap_block_diagonal():
    pa, pb = fig1(), fig1().replace(eps1=5, eps2=7, phi1=0.6)
    f = direct_sum(two_level_family(pa), two_level_family(pb))
    for p in (pa, pb):
        for cf in ep_closed_form(p):
            ep = ep_refine(f, cf.lambda_c)
            assert sheet_swap_check(f, ep, radius=0.02)
            res = encircle(f, LoopSpec(ep.lambda_c, 0.02, steps=1024))
            fixed = [k for k in range(4) if res.permutation[k] == k]
            assert len(fixed) == 2

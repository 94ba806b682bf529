"""Continuous labelling of eigenvalues along a parameter path.

Shared by real-lambda sweeps and closed loops. Each accepted point is
matched to the previous one by a minimal-total-distance assignment; a step
is bisected while that cost exceeds half of the smallest eigenvalue gap.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import GaugeBreakdownError
from .spectra import eigenvalues_general, eigenvector_general, min_gap

# accepted steps keep successive normalised overlaps above this modulus
CONTINUITY_OVERLAP = 0.99


@dataclass
class Track:
    ts: np.ndarray
    lambdas: np.ndarray
    energies: np.ndarray
    costs: np.ndarray
    degenerate: np.ndarray
    gaps: np.ndarray
    states: list
    deficit: float


def assign(reference, values):
    """Reorder ``values`` to best match ``reference``; returns ``(ordered, cost)``."""
    reference = np.asarray(reference)
    values = np.asarray(values)
    if len(reference) == 2:
        direct = abs(values[0] - reference[0]) + abs(values[1] - reference[1])
        swapped = abs(values[1] - reference[0]) + abs(values[0] - reference[1])
        if swapped < direct:
            return values[::-1].copy(), swapped
        return values.copy(), direct
    cost = np.abs(reference[:, None] - values[None, :])
    rows, cols = linear_sum_assignment(cost)
    ordered = np.empty_like(values)
    ordered[rows] = values[cols]
    return ordered, float(cost[rows, cols].sum())


def gauge_align(prev, next_raw):
    """Rescale ``next_raw`` to unit norm with ``<prev, result>`` real positive.

    Raises
    ------
    GaugeBreakdownError
        If ``next_raw`` is (numerically) orthogonal to ``prev``.
    """
    prev = np.asarray(prev, dtype=complex)
    next_raw = np.asarray(next_raw, dtype=complex)
    norm = np.linalg.norm(next_raw)
    overlap = np.vdot(prev, next_raw)
    if norm == 0 or abs(overlap) <= 1e-12 * norm * np.linalg.norm(prev):
        raise GaugeBreakdownError("vector is orthogonal to its predecessor")
    return next_raw * (overlap.conjugate() / abs(overlap)) / norm


def fix_phase(v):
    """Unit vector whose largest-modulus component is real positive."""
    v = np.asarray(v, dtype=complex)
    k = int(np.argmax(np.abs(v)))
    return v * (abs(v[k]) / v[k]) / np.linalg.norm(v)


def hermitian_transport(h, energies, prev, strict):
    """Transport callback for :func:`track` using the Hermitian-overlap gauge."""
    vecs = np.empty((len(energies), h.shape[0]), dtype=complex)
    deficit = 0.0
    for k, e in enumerate(energies):
        v = eigenvector_general(h, e).vector
        v = v / np.linalg.norm(v)
        if prev is None:
            vecs[k] = fix_phase(v)
            continue
        overlap = abs(np.vdot(prev[k], v))
        if strict and overlap < CONTINUITY_OVERLAP:
            raise GaugeBreakdownError(f"overlap {overlap:.3f} on label {k}")
        try:
            vecs[k] = gauge_align(prev[k], v)
        except GaugeBreakdownError:
            if strict:
                raise
            vecs[k] = v
        deficit += 1.0 - overlap
    return vecs, deficit


def initial_order(eigs):
    """Deterministic starting labels: ascending real part, then imaginary."""
    eigs = np.asarray(eigs)
    return eigs[np.lexsort((eigs.imag, eigs.real))]


def track(family, path, grid, transport=None, max_depth=12):
    """Follow the spectrum of ``family(path(t))`` over the parameter ``grid``.

    ``transport(h, energies, prev_state, strict)`` optionally carries
    eigenvectors along and returns ``(state, deficit)``; it may raise
    :class:`GaugeBreakdownError` to request a shorter step. Steps that still
    fail at ``max_depth`` bisections are accepted with labels taken from
    velocity extrapolation and flagged ``degenerate``.
    """
    grid = np.asarray(grid, dtype=float)
    lam0 = path(grid[0])
    h0 = family(lam0)
    e0 = initial_order(eigenvalues_general(h0).eigenvalues)
    state0 = transport(h0, e0, None, True)[0] if transport else None
    ts, lams, energies = [grid[0]], [lam0], [e0]
    costs, degenerate, gaps, states = [0.0], [False], [min_gap(e0)[0]], [state0]
    deficit = 0.0

    for target in grid[1:]:
        stack = [(target, 0)]
        while stack:
            tb, depth = stack[-1]
            ta, ea = ts[-1], energies[-1]
            lam = path(tb)
            h = family(lam)
            spec = eigenvalues_general(h, initial=ea).eigenvalues
            eb, cost = assign(ea, spec)
            split = cost > 0.5 * gaps[-1]
            result = None
            if not split and transport:
                try:
                    result = transport(h, eb, states[-1], True)
                except GaugeBreakdownError:
                    split = True
            if split and depth < max_depth:
                mid = 0.5 * (ta + tb)
                stack[-1] = (tb, depth + 1)
                stack.append((mid, depth + 1))
                continue
            if split:
                if len(ts) >= 2 and ts[-1] != ts[-2]:
                    velocity = (ea - energies[-2]) / (ts[-1] - ts[-2])
                    predicted = ea + velocity * (tb - ta)
                else:
                    predicted = ea
                eb, _ = assign(predicted, spec)
                cost = float(np.abs(eb - ea).sum())
                if transport:
                    result = transport(h, eb, states[-1], False)
            stack.pop()
            ts.append(tb)
            lams.append(lam)
            energies.append(eb)
            costs.append(cost)
            degenerate.append(bool(split))
            gaps.append(min_gap(eb)[0])
            if transport:
                states.append(result[0])
                deficit += result[1]
            else:
                states.append(None)
    return Track(np.array(ts), np.array(lams), np.array(energies), np.array(costs),
                 np.array(degenerate), np.array(gaps), states, deficit)

"""Eigensolver checks: dense agreement, closed forms, structural invariants."""

import math

import numpy as np
import pytest

from sglab.bitperm import ScrambleTable
from sglab.errors import ResourceLimitError
from sglab.eigensolve import (
    dense_spectrum,
    gap,
    ground_state,
    lowest_k,
    mid_spectrum,
    min_gap,
    positive_ground_vector,
)
from sglab.hamiltonian import AdiabaticOperator


def identity_gap(s):
    return math.sqrt(s * s + (1 - s) * (1 - s))


def identity_levels(n, s, count):
    """Sorted level stack n*eps + m*g with binomial multiplicities."""
    g = identity_gap(s)
    eps = 0.5 * (1.0 - g)
    levels = []
    for m in range(n + 1):
        levels.extend([n * eps + m * g] * math.comb(n, m))
    return np.array(sorted(levels)[:count])


@pytest.mark.parametrize("seed", [0, 1])
@pytest.mark.parametrize("s", [0.0, 0.35, 0.5, 1.0])
def test_lowest_k_matches_dense(seed, s):
    op = AdiabaticOperator(ScrambleTable.random(6, seed=seed))
    ref = dense_spectrum(op, s).eigenvalues
    got = lowest_k(op, s, k=10, tol=1e-10).eigenvalues
    assert np.allclose(got, ref[:10], atol=1e-8)


def test_lowest_k_vectors_are_eigenvectors():
    op = AdiabaticOperator(ScrambleTable.random(7, seed=3))
    sl = lowest_k(op, 0.45, k=4, tol=1e-10, want_vectors=True)
    for j in range(4):
        v = sl.eigenvectors[:, j]
        r = op.apply(0.45, v) - sl.eigenvalues[j] * v
        assert np.linalg.norm(r) < 1e-7


@pytest.mark.parametrize("n", [4, 8])
def test_identity_gap_closed_form(n):
    op = AdiabaticOperator(ScrambleTable.identity(n))
    for s in np.linspace(0.0, 1.0, 11):
        assert gap(op, float(s)) == pytest.approx(identity_gap(s), abs=1e-9)


def test_identity_spectrum_closed_form():
    op = AdiabaticOperator(ScrambleTable.identity(6))
    for s in (0.2, 0.5, 0.9):
        got = lowest_k(op, s, k=15, tol=1e-10).eigenvalues
        assert np.allclose(got, identity_levels(6, s, 15), atol=1e-8)


def test_min_gap_identity():
    op = AdiabaticOperator(ScrambleTable.identity(4))
    r = min_gap(op)
    assert r.s_min == pytest.approx(0.5, abs=1e-5)
    assert r.gap == pytest.approx(math.sqrt(0.5), abs=1e-8)
    assert r.bracket[0] <= r.s_min <= r.bracket[1]


def test_min_gap_matches_dense_profile():
    # brute-force the minimum over a fine grid and check the search finds it
    op = AdiabaticOperator(ScrambleTable.random(8, seed=12))
    grid = np.linspace(0.0, 1.0, 401)
    gaps = []
    for s in grid:
        vals = dense_spectrum(op, float(s)).eigenvalues
        gaps.append(vals[1] - vals[0])
    gaps = np.array(gaps)
    r = min_gap(op)
    assert r.gap <= gaps.min() + 1e-8
    assert abs(r.s_min - grid[np.argmin(gaps)]) < 5e-3


def test_ground_energy_concave_in_s():
    # H(s) is linear in s, so E0(s) = inf over states of a linear function
    op = AdiabaticOperator(ScrambleTable.random(9, seed=2))
    s_grid = np.linspace(0.0, 1.0, 21)
    e0 = np.array([lowest_k(op, float(s), k=1, tol=1e-10).eigenvalues[0]
                   for s in s_grid])
    assert np.all(np.diff(e0, 2) <= 1e-7)


def test_ground_energy_lipschitz():
    # |dH/ds| <= n in operator norm, so E0 moves at most n |s - s'|
    op = AdiabaticOperator(ScrambleTable.random(8, seed=8))
    pts = [0.0, 0.2, 0.45, 0.5, 0.8, 1.0]
    vals = {s: lowest_k(op, s, k=1, tol=1e-10).eigenvalues[0] for s in pts}
    for a in pts:
        for b in pts:
            assert abs(vals[a] - vals[b]) <= op.n * abs(a - b) + 1e-9


def test_spectrum_invariant_under_hypercube_relabeling():
    # relabeling strings by a bit permutation plus a mask maps flip
    # neighbors to flip neighbors, so conjugated tables are isospectral
    n = 5
    base = ScrambleTable.random(n, seed=17)
    rng = np.random.default_rng(40)
    bits = rng.permutation(n)
    mask = int(rng.integers(1 << n))

    def relabel(z):
        out = 0
        for i in range(n):
            out |= ((z >> i) & 1) << bits[i]
        return out ^ mask

    g = np.array([relabel(z) for z in range(1 << n)], dtype=np.uint32)
    forward = g[base.forward]
    inverse = np.empty_like(forward)
    inverse[forward] = np.arange(1 << n, dtype=np.uint32)
    moved = ScrambleTable(n=n, forward=forward, inverse=inverse, seed=0,
                          generator="conjugated")
    for s in (0.3, 0.5, 0.7):
        a = dense_spectrum(AdiabaticOperator(base), s).eigenvalues
        b = dense_spectrum(AdiabaticOperator(moved), s).eigenvalues
        assert np.allclose(a, b, atol=1e-10)


def test_mid_spectrum_matches_dense_slice():
    op = AdiabaticOperator(ScrambleTable.random(5, seed=1))
    full = dense_spectrum(op, 0.5).eigenvalues
    got = mid_spectrum(op, 0.5, (10, 21)).eigenvalues
    assert np.allclose(got, full[10:22], atol=1e-10)


def test_ground_state_sign_and_norm():
    op = AdiabaticOperator(ScrambleTable.random(6, seed=4))
    e0, v = ground_state(op, 0.5)
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-10)
    assert v[np.argmax(np.abs(v))] > 0
    assert e0 == pytest.approx(dense_spectrum(op, 0.5).eigenvalues[0], abs=1e-8)


def test_positive_ground_vector_strictly_positive():
    op = AdiabaticOperator(ScrambleTable.random(8, seed=10))
    for s in (0.1, 0.5, 0.9):
        lam, v, res = positive_ground_vector(op, s)
        assert v.min() > 0.0
        assert res < 1e-7
        assert lam == pytest.approx(dense_spectrum(op, s).eigenvalues[0], abs=1e-7)
    with pytest.raises(ValueError):
        positive_ground_vector(op, 1.0)


def test_size_caps():
    big = ScrambleTable.random(14, seed=0)
    with pytest.raises(ResourceLimitError):
        dense_spectrum(AdiabaticOperator(big), 0.5)
    # krylov cap needs n > 20; the table itself stays in range
    giant = ScrambleTable.random(21, seed=0)
    with pytest.raises(ResourceLimitError):
        lowest_k(AdiabaticOperator(giant), 0.5, k=1)


def test_degenerate_stack_fully_resolved():
    # s=0 spectrum is 0, then n copies of 1; deflation must count them all
    op = AdiabaticOperator(ScrambleTable.random(8, seed=5))
    got = lowest_k(op, 0.0, k=9, tol=1e-10).eigenvalues
    want = np.concatenate([[0.0], np.ones(8)])
    assert np.allclose(got, want, atol=1e-8)

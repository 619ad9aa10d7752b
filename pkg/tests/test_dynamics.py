"""Propagator checks: limits, conservation, convergence order, bound formulas."""

import math

import numpy as np
import pytest

from sglab.bitperm import ScrambleTable
from sglab.dynamics import (
    StepControl,
    adiabatic_bound,
    evolve,
    grover_time_floor,
    simplified_bound,
)
from sglab.errors import ResourceLimitError
from sglab.hamiltonian import AdiabaticOperator, cost_rms


def test_instant_quench_keeps_uniform_weight():
    # at T -> 0 the state has no time to move; success is the uniform overlap
    op = AdiabaticOperator(ScrambleTable.random(5, seed=3))
    r = evolve(op, T=1e-4)
    assert r.success_probability == pytest.approx(2.0 ** -5, abs=1e-4)
    assert r.norm_drift < 1e-12


def test_frozen_hamiltonian_conserves_energy():
    op = AdiabaticOperator(ScrambleTable.random(6, seed=1))
    control = StepControl(frozen_s=0.5)
    r = evolve(op, T=5.0, control=control)
    psi = r.final_state
    e_final = float(np.real(np.vdot(psi, op.apply(0.5, psi))))
    uniform = np.full(op.dim, op.dim ** -0.5)
    e_start = float(uniform @ op.apply(0.5, uniform))
    assert e_final == pytest.approx(e_start, abs=1e-10)
    assert r.norm_drift < 1e-12


def test_step_doubling_is_second_order():
    op = AdiabaticOperator(ScrambleTable.random(4, seed=8))
    T = 2.0
    states = {}
    for h in (0.08, 0.04, 0.02, 0.01):
        control = StepControl(fixed_step=h)
        states[h] = evolve(op, T=T, control=control).final_state
    e1 = np.linalg.norm(states[0.08] - states[0.01])
    e2 = np.linalg.norm(states[0.04] - states[0.01])
    e3 = np.linalg.norm(states[0.02] - states[0.01])
    # midpoint freezing: error ~ h^2, so each halving divides by about 4
    assert 3.0 < e1 / e2 < 5.5
    assert 3.0 < e2 / e3 < 7.0


def test_adaptive_matches_tiny_fixed_step():
    op = AdiabaticOperator(ScrambleTable.random(4, seed=2))
    loose = evolve(op, T=3.0, control=StepControl(local_tol=1e-8))
    ref = evolve(op, T=3.0, control=StepControl(fixed_step=5e-4))
    assert np.linalg.norm(loose.final_state - ref.final_state) < 1e-5
    assert loose.steps < ref.steps / 5


def test_identity_long_time_adiabatic():
    op = AdiabaticOperator(ScrambleTable.identity(4))
    r = evolve(op, T=60.0)
    assert r.success_probability > 0.99
    assert r.norm_drift < 1e-10


def test_adiabatic_bound_identity_closed_form():
    # identity gap profile integrates to exactly 2, giving (4n + 56 n^2)/T
    n = 4
    s = np.linspace(0.0, 1.0, 4001)
    g = np.sqrt(s * s + (1.0 - s) * (1.0 - s))
    b = adiabatic_bound(n, s, g, T=100.0)
    assert b == pytest.approx((4 * n + 56 * n * n) / 100.0, rel=1e-6)


def test_adiabatic_bound_validation():
    s = np.array([0.0, 0.5, 1.0])
    g = np.array([1.0, 0.5, 1.0])
    with pytest.raises(ValueError):
        adiabatic_bound(4, s, g, T=0.0)
    with pytest.raises(ValueError):
        adiabatic_bound(4, s[::-1], g, T=1.0)
    with pytest.raises(ValueError):
        adiabatic_bound(4, s, np.array([1.0, 0.0, 1.0]), T=1.0)


def test_simplified_bound_formula():
    assert simplified_bound(10, 0.5, 8.0) == pytest.approx(32 * 100 / (8.0 * 0.125))
    with pytest.raises(ValueError):
        simplified_bound(10, 0.0, 1.0)


def test_grover_floor_against_direct_rms():
    t = ScrambleTable.random(6, seed=5)
    floor, ok = grover_time_floor(0.5, t)
    want = 0.25 * 2.0 ** 3 / (64.0 * cost_rms(t))
    assert floor == pytest.approx(want, rel=1e-12)
    assert ok == (t.size >= 256.0 / 0.5)
    # small epsilon pushes the applicability threshold above desk sizes
    _, ok_tiny = grover_time_floor(1e-3, t)
    assert not ok_tiny


def test_dynamics_cap():
    with pytest.raises(ResourceLimitError):
        evolve(AdiabaticOperator(ScrambleTable.random(21, seed=0)), T=1.0)

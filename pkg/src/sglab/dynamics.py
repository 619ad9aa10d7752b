"""Schrödinger evolution under the interpolating Hamiltonian.

The state starts in the uniform superposition (the s=0 ground state) and
evolves with H(t/T).  Each step freezes the Hamiltonian at the midpoint
schedule value and applies the step exponential through a small Krylov
basis, so the only kernel is the real matvec; freezing is second-order
accurate because H is linear in s.  Step size adapts by step doubling
against a halved pair until the local error estimate is below tolerance.

Also evaluates the closed-form run-time statements the evolution is
checked against: the adiabatic infidelity bound from a gap profile, its
single-gap simplification, and the unstructured-search time floor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .bitperm import ScrambleTable
from .errors import ConvergenceError, ResourceLimitError
from .hamiltonian import AdiabaticOperator, cost_rms

DYNAMICS_CAP = 20
_KRYLOV_DIM = 32


@dataclass(frozen=True)
class StepControl:
    """Integrator knobs.

    local_tol is the per-step error target relative to the state norm.
    fixed_step disables adaptation (convergence studies); frozen_s pins the
    schedule, making the Hamiltonian time independent.
    """

    local_tol: float = 1e-9
    max_krylov: int = _KRYLOV_DIM
    fixed_step: float | None = None
    frozen_s: float | None = None


@dataclass(frozen=True)
class EvolutionResult:
    T: float
    success_probability: float
    norm_drift: float
    steps: int
    final_state: np.ndarray


def _kexp(matvec, psi: np.ndarray, h: float, m_cap: int) -> np.ndarray:
    """exp(-i h H) psi through a Lanczos basis of at most m_cap vectors.

    H is real symmetric, so the projected matrix is real tridiagonal and
    the step is exactly norm preserving up to roundoff.
    """
    dim = psi.shape[0]
    m_cap = min(m_cap, dim)
    beta0 = np.linalg.norm(psi)
    if beta0 == 0.0:
        return psi.copy()
    V = np.empty((m_cap, dim), dtype=np.complex128)
    alpha = np.empty(m_cap)
    beta = np.empty(max(m_cap - 1, 1))
    V[0] = psi / beta0
    m = m_cap
    for j in range(m_cap):
        w = matvec(V[j])
        alpha[j] = np.real(np.vdot(V[j], w))
        w -= alpha[j] * V[j]
        if j > 0:
            w -= beta[j - 1] * V[j - 1]
        w -= V[:j + 1].T @ (V[:j + 1].conj() @ w)
        if j == m_cap - 1:
            break
        b = np.linalg.norm(w)
        if b <= 1e-14 * max(1.0, abs(alpha[j])):
            m = j + 1  # invariant subspace: the projection is exact
            break
        beta[j] = b
        V[j + 1] = w / b
    if m == 1:
        return psi * np.exp(-1j * h * alpha[0])
    theta, y = eigh_tridiagonal(alpha[:m], beta[:m - 1])
    u = y @ (np.exp(-1j * h * theta) * y[0, :])
    return V[:m].T @ (beta0 * u)


def evolve(
    op: AdiabaticOperator,
    T: float,
    control: StepControl | None = None,
    force: bool = False,
) -> EvolutionResult:
    """Evolve the uniform state under H(t/T) for total time T.

    Returns the success probability (population on the cost minimizer), the
    norm drift, and the accepted step count.  In adaptive mode every step is
    computed twice, once whole and once as two halves, and the halved result
    is kept when the difference passes the local tolerance.
    """
    if op.n > DYNAMICS_CAP and not force:
        raise ResourceLimitError(
            f"evolution capped at n={DYNAMICS_CAP} (requested n={op.n}); "
            "pass force to override"
        )
    if T < 0.0:
        raise ValueError(f"need T >= 0, got T={T}")
    if control is None:
        control = StepControl()

    dim = op.dim
    psi = np.full(dim, dim ** -0.5, dtype=np.complex128)
    target = int(op.table.minimizer())

    if T == 0.0:
        return EvolutionResult(
            T=0.0,
            success_probability=float(np.abs(psi[target]) ** 2),
            norm_drift=0.0,
            steps=0,
            final_state=psi,
        )

    if control.frozen_s is not None:
        schedule = lambda t: float(control.frozen_s)
    else:
        schedule = lambda t: t / T

    # Operator norm is below 3n/2 on the whole schedule; keeping h under
    # 8/(1.5 n) holds the Krylov truncation error far beneath the step
    # tolerance at the default basis size.  Small steps need far fewer
    # basis vectors, so the per-step basis tracks h.
    hnorm = 1.5 * max(op.n, 1)
    max_step = 8.0 / hnorm
    tol = control.local_tol

    def basis_for(step: float) -> int:
        return min(control.max_krylov, max(10, int(2.2 * step * hnorm) + 6))
    t = 0.0
    steps = 0
    h = min(T, max_step) if control.fixed_step is None else control.fixed_step
    if h <= 0.0:
        raise ValueError("fixed_step must be positive")

    while t < T * (1.0 - 1e-15):
        h_try = min(h, T - t)
        m_use = basis_for(h_try)
        if control.fixed_step is not None:
            s_mid = schedule(t + 0.5 * h_try)
            psi = _kexp(op.matvec(s_mid), psi, h_try, m_use)
            t += h_try
            steps += 1
            continue
        whole = _kexp(op.matvec(schedule(t + 0.5 * h_try)), psi, h_try, m_use)
        half = _kexp(op.matvec(schedule(t + 0.25 * h_try)), psi,
                     0.5 * h_try, m_use)
        half = _kexp(op.matvec(schedule(t + 0.75 * h_try)), half,
                     0.5 * h_try, m_use)
        nrm = np.linalg.norm(half)
        err = np.linalg.norm(whole - half) / 3.0
        if err <= tol * nrm:
            psi = half
            t += h_try
            steps += 1
            grow = 0.9 * (tol * nrm / max(err, 1e-300)) ** (1.0 / 3.0)
            h = min(max_step, h_try * min(2.0, max(grow, 0.3)))
        else:
            h = 0.5 * h_try
            if h < max(1e-12 * T, 1e-15):
                raise ConvergenceError(
                    f"time step collapsed at t={t:.6g} (h={h:.3g}); "
                    "local error will not meet tolerance"
                )

    nrm = float(np.linalg.norm(psi))
    return EvolutionResult(
        T=float(T),
        success_probability=float(np.abs(psi[target]) ** 2),
        norm_drift=abs(nrm - 1.0),
        steps=steps,
        final_state=psi,
    )


def adiabatic_bound(
    n: int, profile_s: np.ndarray, profile_gap: np.ndarray, T: float
) -> float:
    """Infidelity bound from a gap profile for the linear schedule.

    (1/T) [ 2n/gap(0)^2 + 2n/gap(1)^2 + integral of 28 n^2 / gap^3 ],
    using |dH/ds| <= 2n and a schedule with no second derivative.  The
    integral is a trapezoid rule over the supplied profile.
    """
    s = np.asarray(profile_s, dtype=np.float64)
    g = np.asarray(profile_gap, dtype=np.float64)
    if s.shape != g.shape or s.ndim != 1 or s.size < 2:
        raise ValueError("profile arrays must be equal-length 1-d, size >= 2")
    if np.any(np.diff(s) <= 0):
        raise ValueError("profile s values must be strictly increasing")
    if np.any(g <= 0):
        raise ValueError("gap profile must be strictly positive")
    if T <= 0:
        raise ValueError(f"need T > 0, got T={T}")
    ends = 2.0 * n / g[0] ** 2 + 2.0 * n / g[-1] ** 2
    integral = float(np.trapezoid(28.0 * n * n / g ** 3, s))
    return (ends + integral) / T


def simplified_bound(n: int, g: float, T: float) -> float:
    """Single-number form 32 n^2 / (T g^3), valid for minimum gap g <= 1."""
    if g <= 0:
        raise ValueError(f"need g > 0, got g={g}")
    if T <= 0:
        raise ValueError(f"need T > 0, got T={T}")
    return 32.0 * n * n / (T * g ** 3)


def grover_time_floor(
    epsilon: float, table: ScrambleTable
) -> tuple[float, bool]:
    """Unstructured-search time floor eps^2 sqrt(N) / (64 h*), h* = cost rms.

    Returns (floor, regime_ok) where regime_ok records whether N >= 256/eps,
    the condition under which the floor statement applies.
    """
    if not 0.0 < epsilon <= 1.0:
        raise ValueError(f"need 0 < epsilon <= 1, got {epsilon}")
    root_n = 2.0 ** (table.n / 2.0)
    floor = epsilon ** 2 * root_n / (64.0 * cost_rms(table))
    return floor, bool(table.size >= 256.0 / epsilon)

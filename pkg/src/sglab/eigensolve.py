"""Low-lying spectra, gaps, and minimum-gap search.

Two routes are provided on purpose.  The dense route materializes H(s) and
calls LAPACK; it is exact up to roundoff but capped at small n.  The Krylov
route is a Lanczos iteration with full reorthogonalization against both the
current basis and previously locked eigenpairs.  Locking plus repeated
deflated sweeps lets the solver recover degenerate clusters (a single Krylov
space only ever sees one copy of each eigenvalue), and a final verification
sweep certifies that nothing below the k-th level was missed.

Start vectors are seeded from (n, table seed, s, sweep index), so every solve
is reproducible.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh, eigh_tridiagonal, eigvalsh

from .errors import ConvergenceError, ResourceLimitError
from .hamiltonian import AdiabaticOperator

#: Largest n for which the dense 2^n x 2^n matrix is built without force.
DENSE_CAP = 13
#: Largest n accepted by the Krylov route without force.
KRYLOV_CAP = 20

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class SpectrumSlice:
    """A batch of eigenvalues at one schedule point, ascending."""

    s: float
    eigenvalues: np.ndarray
    residual_norms: np.ndarray | None = None
    eigenvectors: np.ndarray | None = None  # columns, shape (dim, k)
    iterations: int = 0


@dataclass
class GapResult:
    """Outcome of a minimum-gap search over a schedule interval."""

    s_min: float
    gap: float
    bracket: tuple[float, float]
    profile_s: np.ndarray = field(repr=False)
    profile_gap: np.ndarray = field(repr=False)


def _check_krylov_cap(n: int, force: bool) -> None:
    if n > KRYLOV_CAP and not force:
        raise ResourceLimitError(
            f"Krylov route capped at n={KRYLOV_CAP} (requested n={n}); "
            "pass force to override"
        )


def _start_vector(dim: int, n: int, seed: int, s: float, sweep: int) -> np.ndarray:
    """Deterministic pseudo-random start vector keyed by the solve identity."""
    s_bits = struct.unpack("<Q", struct.pack("<d", float(s)))[0]
    ss = np.random.SeedSequence(entropy=[n, seed & (2**64 - 1), s_bits, sweep])
    rng = np.random.Generator(np.random.Philox(ss))
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def _sweep(matvec, v0, locked, need, tol, m_cap, check_every=6,
           prune_cutoff=None):
    """One Lanczos pass on the orthogonal complement of ``locked``.

    Grows the Krylov basis until the lowest ``need`` Ritz pairs have
    estimated residuals below tol, the basis hits m_cap, or beta breaks down
    (invariant subspace exhausted).  Returns the bottom contiguous run of
    pairs whose true residuals pass, so callers may treat the smallest
    returned value as the approximate minimum of the complement.

    With ``prune_cutoff`` set, the pass aborts as soon as the ground pair is
    converged and the second Ritz value sits more than the cutoff above it.
    Ritz values never increase as the basis grows and never drop below their
    eigenvalue, so at that point the true gap provably exceeds the cutoff;
    the last slot of the return tuple then carries the (upper-estimate) gap.
    """
    dim = v0.shape[0]
    m_cap = max(1, min(m_cap, dim - (0 if locked is None else locked.shape[0])))
    V = np.empty((m_cap, dim))
    alpha = np.empty(m_cap)
    beta = np.empty(m_cap)

    def reorth(w, upto):
        # One full pass, repeated only when heavy cancellation says the first
        # pass was not enough (Kahan's twice-is-enough test).
        before = np.linalg.norm(w)
        for _ in range(2):
            if locked is not None and locked.size:
                w -= locked.T @ (locked @ w)
            w -= V[:upto].T @ (V[:upto] @ w)
            after = np.linalg.norm(w)
            if after >= 0.5 * before:
                break
            before = after

    V[0] = v0
    w = matvec(V[0])
    matvecs = 1
    alpha[0] = V[0] @ w
    w = w - alpha[0] * V[0]
    reorth(w, 1)

    m = 1
    breakdown = False
    scale = max(1.0, abs(alpha[0]))
    while True:
        b = np.linalg.norm(w)
        if b <= 1e-13 * scale:
            breakdown = True
            break
        if m == m_cap:
            break
        beta[m - 1] = b
        V[m] = w / b
        w = matvec(V[m])
        matvecs += 1
        w -= b * V[m - 1]
        alpha[m] = V[m] @ w
        w -= alpha[m] * V[m]
        reorth(w, m + 1)
        m += 1
        scale = max(scale, abs(alpha[m - 1]) + b)
        if m % check_every == 0 or m == m_cap:
            theta, y = eigh_tridiagonal(alpha[:m], beta[:m - 1])
            est = np.linalg.norm(w) * np.abs(y[-1, :])
            if (prune_cutoff is not None and m >= 2
                    and est[0] <= 0.25 * tol
                    and theta[1] - theta[0] > prune_cutoff):
                return [], [], [], matvecs, False, float(theta[1] - theta[0])
            converged = 0
            for i in range(min(need, m)):
                if est[i] <= 0.25 * tol:
                    converged += 1
                else:
                    break
            if converged >= need:
                break

    theta, y = eigh_tridiagonal(alpha[:m], beta[:m - 1]) if m > 1 else (
        alpha[:1].copy(), np.ones((1, 1)))
    take = min(need, m)
    vecs = V[:m].T @ y[:, :take]

    # True residuals decide what gets locked; keep the bottom contiguous run.
    vals, cols, resids = [], [], []
    for i in range(take):
        u = vecs[:, i]
        u = u / np.linalg.norm(u)
        r = np.linalg.norm(matvec(u) - theta[i] * u)
        matvecs += 1
        if r > tol:
            break
        vals.append(theta[i])
        cols.append(u)
        resids.append(r)
    return vals, cols, resids, matvecs, breakdown, None


def lowest_k(
    op: AdiabaticOperator,
    s: float,
    k: int,
    tol: float = 1e-9,
    want_vectors: bool = False,
    thorough: bool = True,
    m_cap: int | None = None,
    guard: int | None = None,
    force: bool = False,
) -> SpectrumSlice:
    """Lowest k eigenvalues (and optionally vectors) of H(s) via Lanczos.

    With ``thorough`` set (default), deflated sweeps continue until a fresh
    start vector finds nothing new below the k-th locked level, which resolves
    repeated eigenvalues.  ``thorough=False`` accepts a single converged
    sweep; the ground level of H(s) is simple (positive ground vector), so the
    bottom values are still correct and this is the cheap path for gap scans.
    """
    _check_krylov_cap(op.n, force)
    dim = op.dim
    if not 1 <= k <= dim:
        raise ValueError(f"need 1 <= k <= {dim}, got k={k}")
    matvec = op.matvec(s)
    if guard is None:
        guard = 2 if thorough else 1
    if m_cap is None:
        # Clustered low spectra (driver multiplets split by the scrambled
        # diagonal) converge slowly, so the cap scales with k and doubles
        # whenever a sweep locks nothing.
        m_cap = min(dim, max(12 * k, 120))
    seed = op.table.seed
    max_sweeps = k + 10

    locked_vals: list[float] = []
    locked_vecs: list[np.ndarray] = []
    locked_res: list[float] = []
    total_mv = 0
    slack = max(50.0 * tol, 1e-12 * op.n)
    stalls = 0

    for sweep in range(max_sweeps):
        if len(locked_vals) >= k and not thorough:
            break
        prev = np.sort(locked_vals) if locked_vals else None
        L = np.vstack(locked_vecs) if locked_vecs else None
        free = dim - len(locked_vals)
        if free == 0:
            break
        v0 = _start_vector(dim, op.n, seed, s, sweep)
        if L is not None:
            for _ in range(2):
                v0 -= L.T @ (L @ v0)
            nrm = np.linalg.norm(v0)
            if nrm < 1e-8:
                break  # complement numerically exhausted
            v0 /= nrm
        # A sweep that only verifies (everything locked already) still needs
        # one converged probe of the complement minimum.
        need = min(max(max(k - len(locked_vals), 0) + guard, 1), free)
        vals, cols, resids, mv, broke, _ = _sweep(matvec, v0, L, need, tol,
                                                  m_cap)
        total_mv += mv
        if not vals:
            stalls += 1
            m_cap = min(dim, 2 * m_cap)
            if stalls >= 4:
                raise ConvergenceError(
                    f"no Ritz pair reached tol={tol} after {sweep + 1} sweeps "
                    f"(n={op.n}, s={s}, k={k}, basis cap {m_cap})",
                    residuals=np.asarray(locked_res),
                )
            continue
        if len(vals) < need:
            # Partial progress: the remaining levels are evidently harder.
            m_cap = min(dim, m_cap + m_cap // 2)
        min_new = vals[0]
        locked_vals.extend(vals)
        locked_vecs.extend(cols)
        locked_res.extend(resids)
        if len(locked_vals) >= k:
            if not thorough:
                break
            if prev is not None and prev.size >= k and min_new >= prev[k - 1] - slack:
                break
            if len(locked_vals) >= dim:
                break
    else:
        raise ConvergenceError(
            f"lowest_k did not stabilize after {max_sweeps} sweeps "
            f"(n={op.n}, s={s}, k={k}, locked={len(locked_vals)})",
            residuals=np.asarray(locked_res),
        )

    if len(locked_vals) < k:
        raise ConvergenceError(
            f"only {len(locked_vals)} of {k} eigenpairs converged "
            f"(n={op.n}, s={s})",
            residuals=np.asarray(locked_res),
        )
    order = np.argsort(locked_vals, kind="stable")[:k]
    eigenvalues = np.asarray(locked_vals)[order]
    residuals = np.asarray(locked_res)[order]
    vectors = None
    if want_vectors:
        vectors = np.stack([locked_vecs[i] for i in order], axis=1)
    return SpectrumSlice(
        s=s,
        eigenvalues=eigenvalues,
        residual_norms=residuals,
        eigenvectors=vectors,
        iterations=total_mv,
    )


def dense_spectrum(
    op: AdiabaticOperator,
    s: float,
    want_vectors: bool = False,
    force: bool = False,
) -> SpectrumSlice:
    """Full spectrum from the materialized matrix (small n reference route)."""
    if op.n > DENSE_CAP and not force:
        raise ResourceLimitError(
            f"dense route capped at n={DENSE_CAP} (requested n={op.n}); "
            "pass force to override"
        )
    h = op.dense_matrix(s, max_n=max(op.n, DENSE_CAP))
    if want_vectors:
        vals, vecs = eigh(h)
        return SpectrumSlice(s=s, eigenvalues=vals, eigenvectors=vecs)
    vals = eigvalsh(h)
    return SpectrumSlice(s=s, eigenvalues=vals)


def mid_spectrum(
    op: AdiabaticOperator,
    s: float,
    window: tuple[int, int],
    force: bool = False,
) -> SpectrumSlice:
    """Eigenvalues with sorted indices in [window[0], window[1]], dense route."""
    lo, hi = window
    if not 0 <= lo <= hi < op.dim:
        raise ValueError(f"index window {window} out of range for dim={op.dim}")
    if op.n > DENSE_CAP and not force:
        raise ResourceLimitError(
            f"dense route capped at n={DENSE_CAP} (requested n={op.n}); "
            "pass force to override"
        )
    h = op.dense_matrix(s, max_n=max(op.n, DENSE_CAP))
    vals = eigvalsh(h, subset_by_index=(lo, hi))
    return SpectrumSlice(s=s, eigenvalues=vals)


def gap(op: AdiabaticOperator, s: float, tol: float = 1e-10,
        m_cap: int | None = None, force: bool = False) -> float:
    """Spectral gap (first excited minus ground) of H(s).

    Near-degenerate results trigger one re-run with a wider window and a
    tighter tolerance before the value is trusted.
    """
    # guard=0: only the two lowest levels are converged, so a clustered third
    # level cannot stall the scan.  The ground level is simple, and a missed
    # first excited level would need a start vector orthogonal to it.
    sl = lowest_k(op, s, k=2, tol=tol, thorough=False, guard=0, m_cap=m_cap,
                  force=force)
    g = float(sl.eigenvalues[1] - sl.eigenvalues[0])
    if g < 10.0 * tol:
        sl = lowest_k(op, s, k=min(6, op.dim), tol=tol / 10.0, thorough=True,
                      force=force)
        g = float(sl.eigenvalues[1] - sl.eigenvalues[0])
    return g


def ground_state(
    op: AdiabaticOperator, s: float, tol: float = 1e-9, force: bool = False
) -> tuple[float, np.ndarray]:
    """Ground energy and sign-fixed ground vector of H(s)."""
    sl = lowest_k(op, s, k=1, tol=tol, want_vectors=True, thorough=False,
                  force=force)
    v = sl.eigenvectors[:, 0]
    pivot = np.argmax(np.abs(v))
    if v[pivot] < 0:
        v = -v
    return float(sl.eigenvalues[0]), v


def positive_ground_vector(
    op: AdiabaticOperator, s: float, tol: float = 1e-9, force: bool = False
) -> tuple[float, np.ndarray, float]:
    """Entrywise-positive witness of the ground state, for s < 1.

    The Lanczos vector is accurate but its far-tail entries sit at the
    roundoff floor where signs are noise.  Since c*I - H(s) has nonnegative
    entries for c >= n, repeatedly applying it to the absolute value of the
    vector pushes positive weight along every hop while only damping the
    error components, so after n applications (the hop-graph diameter) every
    entry is strictly positive for genuine stoquastic ground states.  Returns
    (rayleigh quotient, vector, true residual norm).
    """
    if s >= 1.0:
        raise ValueError("positivity polish needs s < 1 (connected hop graph)")
    _, v = ground_state(op, s, tol=tol, force=force)
    v = np.abs(v)
    c = op.n + 1.0
    for _ in range(op.n):
        v = c * v - op.apply(s, v)
        v /= np.linalg.norm(v)
    lam = float(v @ op.apply(s, v))
    res = float(np.linalg.norm(op.apply(s, v) - lam * v))
    return lam, v, res


def _scan_gap(
    op: AdiabaticOperator, s: float, tol: float, cutoff: float, force: bool
) -> tuple[float, bool]:
    """Gap at one scan point, abandoned early when it cannot be the minimum.

    Returns (value, pruned).  A pruned value is a certified overestimate of
    the true gap that still exceeds ``cutoff``; an unpruned value is accurate
    to roughly tol**2 over the local level spacing.
    """
    matvec = op.matvec(s)
    v0 = _start_vector(op.dim, op.n, op.table.seed, s, 0)
    m_cap = min(op.dim, 256)
    vals, _, _, _, _, pruned = _sweep(matvec, v0, None, 2, tol, m_cap,
                                      prune_cutoff=cutoff)
    if pruned is not None:
        return pruned, True
    if len(vals) >= 2:
        return float(vals[1] - vals[0]), False
    # Cap hit without locking both levels: hand the point to the full
    # deflation machinery.
    return gap(op, s, tol=tol, m_cap=m_cap, force=force), False


def min_gap(
    op: AdiabaticOperator,
    s_range: tuple[float, float] = (0.0, 1.0),
    coarse_step: float = 0.02,
    refine_tol: float = 1e-6,
    tol: float = 1e-10,
    scan_tol: float = 1e-5,
    force: bool = False,
) -> GapResult:
    """Minimum spectral gap over a schedule interval.

    A uniform coarse scan locates the candidate bracket (smallest s wins a
    tie), then golden-section refinement narrows it to refine_tol, and the
    winner is re-evaluated at the tight tolerance.  Staged accuracy keeps the
    scan cheap without touching the reported value: Ritz value error scales
    as the squared residual, so scan-tolerance profile entries are still good
    to ~1e-7, far below anything that could move the bracket.  The scan also
    visits points from the middle of the interval outward and abandons any
    point once the partial tridiagonalization proves its gap exceeds the
    running minimum (Ritz values bound eigenvalues from above and only
    decrease as the basis grows); such profile entries record the bound that
    proved it, so every profile entry is >= the reported gap either way.
    """
    lo, hi = s_range
    if not 0.0 <= lo < hi <= 1.0:
        raise ValueError(f"bad schedule interval {s_range}")
    if coarse_step > 0.02 + 1e-15:
        raise ValueError("coarse_step must be at most 0.02")
    npts = int(round((hi - lo) / coarse_step)) + 1
    grid = np.linspace(lo, hi, npts)

    profile = np.empty(npts)
    running = np.inf
    order = np.argsort(np.abs(grid - 0.5 * (lo + hi)), kind="stable")
    for i in order:
        cutoff = 1.05 * running + 1e-3
        g_i, pruned = _scan_gap(op, float(grid[i]), scan_tol, cutoff, force)
        profile[i] = g_i
        if not pruned:
            running = min(running, g_i)

    i0 = int(np.argmin(profile))
    a = grid[max(i0 - 1, 0)]
    b = grid[min(i0 + 1, npts - 1)]

    evals: dict[float, float] = {float(grid[i0]): float(profile[i0])}
    eval_tol = max(tol, 1e-6)

    def f(x: float) -> float:
        x = float(x)
        if x not in evals:
            evals[x] = gap(op, x, tol=eval_tol, m_cap=min(op.dim, 256),
                           force=force)
        return evals[x]

    # Golden-section: keep two interior probes, shrink until the bracket is
    # tighter than refine_tol.
    x1 = b - _INV_PHI * (b - a)
    x2 = a + _INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > refine_tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INV_PHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INV_PHI * (b - a)
            f2 = f(x2)

    s_best = min(evals, key=lambda x: (evals[x], x))
    g_best = gap(op, s_best, tol=tol, m_cap=min(op.dim, 256), force=force)
    return GapResult(
        s_min=float(s_best),
        gap=float(g_best),
        bracket=(float(a), float(b)),
        profile_s=grid,
        profile_gap=profile,
    )

"""Experiment drivers shared by the CLI and the HTTP service.

Each driver validates nothing itself (the request models did that), builds
the operator, fans independent work units out to a thread pool, and merges
results in fixed input order so the output is identical no matter how the
pool schedules.  Failures of single work units are collected as strings
and the run continues; callers decide how to surface them.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__, bounds, dynamics, eigensolve
from .bitperm import GENERATOR_TAG, IDENTITY_TAG, ScrambleTable
from .errors import ConfigError, ParameterRegimeError, SglabError
from .hamiltonian import AdiabaticOperator
from .schemas import (
    BoundRow,
    BoundsRequest,
    BoundsResponse,
    EvolveRequest,
    EvolveResponse,
    LateGapRequest,
    LateGapResponse,
    LateGapRow,
    LocalizeRequest,
    LocalizeResponse,
    LocalizeRow,
    MidSpectrumRequest,
    MidSpectrumResponse,
    MinGapRequest,
    MinGapResponse,
    MinGapRow,
    MinGapSummary,
    NeighborStatsRequest,
    NeighborStatsResponse,
    RunMeta,
    SpectrumRequest,
    SpectrumResponse,
    SpectrumRow,
)

THREADS_ENV = "SGLAB_THREADS"

# Dense diagonalization beats deflated Lanczos for full level stacks up to
# here; above it the matrix-free path takes over.
_SPECTRUM_DENSE_MAX = 9


def _table(n: int, seed: int, perm: str) -> ScrambleTable:
    if perm == "identity":
        return ScrambleTable.identity(n)
    return ScrambleTable.random(n, seed=seed)


def _meta(command: str, req, perm: str) -> RunMeta:
    tag = IDENTITY_TAG if perm == "identity" else GENERATOR_TAG
    return RunMeta(
        command=command,
        config=req.model_dump(),
        generator=tag,
        version=__version__,
    )


def _thread_count(requested: int | None) -> int:
    if requested is not None:
        return requested
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        count = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV}={raw!r} is not an integer") from None
    if count < 1:
        raise ConfigError(f"{THREADS_ENV} must be at least 1, got {count}")
    return count


def _ordered_map(work, items, threads: int) -> list:
    """Apply work to items, results in input order regardless of scheduling."""
    if threads <= 1 or len(items) <= 1:
        return [work(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(work, items))


def _grid(spec) -> np.ndarray:
    lo, hi, count = spec
    return np.linspace(lo, hi, count)


def run_spectrum(req: SpectrumRequest) -> SpectrumResponse:
    table = _table(req.n, req.seed, req.perm)
    op = AdiabaticOperator(table)
    use_dense = req.n <= _SPECTRUM_DENSE_MAX

    def work(s: float):
        try:
            if use_dense:
                sl = eigensolve.dense_spectrum(op, s, force=req.force)
                vals = sl.eigenvalues[: req.levels]
            else:
                sl = eigensolve.lowest_k(
                    op, s, k=req.levels, tol=req.tol, force=req.force
                )
                vals = sl.eigenvalues
            return [
                SpectrumRow(s=float(s), level=j, energy=float(v))
                for j, v in enumerate(vals)
            ]
        except SglabError as exc:
            return f"s={s:.6g}: {exc}"

    rows: list[SpectrumRow] = []
    failures: list[str] = []
    for out in _ordered_map(work, list(_grid(req.s_grid)), _thread_count(req.threads)):
        if isinstance(out, str):
            failures.append(out)
        else:
            rows.extend(out)
    return SpectrumResponse(meta=_meta("spectrum", req, req.perm), rows=rows,
                            failures=failures)


def run_min_gap(req: MinGapRequest) -> MinGapResponse:
    jobs = [(n, seed)
            for n in req.n_list
            for seed in range(req.seeds[0], req.seeds[1] + 1)]

    def work(job):
        n, seed = job
        try:
            op = AdiabaticOperator(_table(n, seed, req.perm))
            r = eigensolve.min_gap(
                op,
                coarse_step=req.coarse_step,
                refine_tol=req.refine_tol,
                tol=req.tol,
                force=req.force,
            )
            return MinGapRow(n=n, seed=seed, s_min=r.s_min, gap=r.gap)
        except SglabError as exc:
            return f"n={n} seed={seed}: {exc}"

    rows: list[MinGapRow] = []
    failures: list[str] = []
    for out in _ordered_map(work, jobs, _thread_count(req.threads)):
        if isinstance(out, str):
            failures.append(out)
        else:
            rows.append(out)

    summaries = []
    for n in req.n_list:
        gaps = np.array([r.gap for r in rows if r.n == n])
        if gaps.size == 0:
            continue
        q1, med, q3 = np.percentile(gaps, [25.0, 50.0, 75.0])
        summaries.append(MinGapSummary(
            n=n, seeds=int(gaps.size), median_gap=float(med),
            q1_gap=float(q1), q3_gap=float(q3),
        ))
    return MinGapResponse(meta=_meta("min-gap", req, req.perm), rows=rows,
                          summaries=summaries, failures=failures)


def run_bounds(req: BoundsRequest) -> BoundsResponse:
    table = _table(req.n, req.seed, req.perm)
    op = AdiabaticOperator(table)
    n = req.n
    trial = None
    trial_error = None
    try:
        trial = bounds.transition_trial(table)
    except ParameterRegimeError as exc:
        trial_error = str(exc)

    uniform = np.full(op.dim, op.dim ** -0.5)
    localized = np.zeros(op.dim)
    localized[table.minimizer()] = 1.0
    shrink = 1.0 - 5.0 * float(n) ** -0.25

    def work(s: float):
        try:
            sl = eigensolve.lowest_k(op, s, k=1, tol=req.tol, thorough=False,
                                     force=req.force)
            ground = float(sl.eigenvalues[0])
            upper = min(bounds.variational_upper(op, s, uniform),
                        bounds.variational_upper(op, s, localized))
            e_s = bounds.energy_density(s)
            row = dict(
                s=float(s), ground=ground, upper=float(upper),
                lower=None, c=None, k=None, lambda_or_mu=None,
                argmin_string=None,
                upper_ok=bool(ground / n <= e_s + 1e-12),
                floor_value=e_s * shrink,
                floor_ok=bool(ground / n >= e_s * shrink - 1e-12),
            )
            if trial is not None:
                lo, argmin = bounds.cw_lower(op, s, trial.state)
                row.update(lower=float(lo), c=trial.c, k=trial.k,
                           lambda_or_mu=trial.lam, argmin_string=argmin)
            return BoundRow(**row)
        except SglabError as exc:
            return f"s={s:.6g}: {exc}"

    rows: list[BoundRow] = []
    failures: list[str] = []
    for out in _ordered_map(work, list(_grid(req.s_grid)), _thread_count(req.threads)):
        if isinstance(out, str):
            failures.append(out)
        else:
            rows.append(out)
    return BoundsResponse(meta=_meta("bounds", req, req.perm), rows=rows,
                          trial_error=trial_error, failures=failures)


def run_localize(req: LocalizeRequest) -> LocalizeResponse:
    table = _table(req.n, req.seed, req.perm)
    op = AdiabaticOperator(table)
    target = int(table.minimizer())
    root_dim = op.dim ** 0.5

    def work(s: float):
        try:
            _, v = eigensolve.ground_state(op, s, tol=req.tol, force=req.force)
            return LocalizeRow(
                s=float(s),
                overlap_uniform=float((v.sum() / root_dim) ** 2),
                overlap_target=float(v[target] ** 2),
                ipr=float(np.sum(v ** 4)),
            )
        except SglabError as exc:
            return f"s={s:.6g}: {exc}"

    rows: list[LocalizeRow] = []
    failures: list[str] = []
    for out in _ordered_map(work, list(_grid(req.s_grid)), _thread_count(req.threads)):
        if isinstance(out, str):
            failures.append(out)
        else:
            rows.append(out)
    return LocalizeResponse(meta=_meta("localize", req, req.perm), rows=rows,
                            failures=failures)


def run_late_gap(req: LateGapRequest) -> LateGapResponse:
    table = _table(req.n, req.seed, req.perm)
    op = AdiabaticOperator(table)
    n = req.n
    c = bounds.solve_c(req.entropy_target)

    def work(s: float):
        try:
            g = eigensolve.gap(op, s, tol=req.tol, force=req.force)
            excited = gap_lo = term = None
            if s >= 1.0 - 1e-12:
                # Diagonal endpoint: the reduced minimum is the second-lowest
                # cost, exactly 1.
                excited, gap_lo, term = 1.0, 1.0, bounds.late_term(1.0, c)
            else:
                try:
                    chi = bounds.late_trial(table, float(s), c)
                    excited, _ = bounds.first_excited_lower(op, float(s), chi)
                    gap_lo = excited - 0.5 * (1.0 - s) * n
                    term = bounds.late_term(float(s), c)
                except ParameterRegimeError:
                    pass  # below the admissible schedule range: gap only
            return LateGapRow(s=float(s), gap=float(g), excited_lower=excited,
                              gap_lower=gap_lo, analytic_term=term)
        except SglabError as exc:
            return f"s={s:.6g}: {exc}"

    rows: list[LateGapRow] = []
    failures: list[str] = []
    for out in _ordered_map(work, list(_grid(req.s_grid)), _thread_count(req.threads)):
        if isinstance(out, str):
            failures.append(out)
        else:
            rows.append(out)
    min_gap = min((r.gap for r in rows), default=float("nan"))
    return LateGapResponse(meta=_meta("theorem3", req, req.perm), c=c,
                           rows=rows, min_gap=float(min_gap),
                           failures=failures)


def run_evolve(req: EvolveRequest) -> EvolveResponse:
    table = _table(req.n, req.seed, req.perm)
    op = AdiabaticOperator(table)
    control = dynamics.StepControl(local_tol=req.local_tol)
    r = dynamics.evolve(op, req.T, control=control, force=req.force)
    return EvolveResponse(
        meta=_meta("evolve", req, req.perm),
        n=req.n, seed=req.seed, T=r.T,
        success_probability=r.success_probability,
        norm_drift=r.norm_drift, steps=r.steps,
    )


def run_mid_spectrum(req: MidSpectrumRequest) -> MidSpectrumResponse:
    table = _table(req.n, req.seed, req.perm)
    op = AdiabaticOperator(table)
    if req.window is None:
        center = op.dim // 2
        window = (max(center - 12, 0), min(center + 12, op.dim - 1))
    else:
        window = req.window

    def work(s: float):
        try:
            sl = eigensolve.mid_spectrum(op, s, window, force=req.force)
            return [
                SpectrumRow(s=float(s), level=window[0] + j, energy=float(v))
                for j, v in enumerate(sl.eigenvalues)
            ]
        except SglabError as exc:
            return f"s={s:.6g}: {exc}"

    rows: list[SpectrumRow] = []
    failures: list[str] = []
    for out in _ordered_map(work, list(_grid(req.s_grid)), _thread_count(req.threads)):
        if isinstance(out, str):
            failures.append(out)
        else:
            rows.extend(out)
    return MidSpectrumResponse(meta=_meta("mid-spectrum", req, req.perm),
                               rows=rows, failures=failures)


def run_neighbor_stats(req: NeighborStatsRequest) -> NeighborStatsResponse:
    n = req.n
    if req.c is not None:
        probe = _table(n, req.seed, req.perm)
        set_size = int(bounds.low_cost_set(probe, req.c).size)
    else:
        set_size = int(round(2.0 ** (req.gamma * n)))
        set_size = max(1, min(set_size, 1 << n))
    gamma_eff = math.log2(max(set_size, 1)) / n

    def work(trial: int):
        t = _table(n, req.seed + trial, req.perm)
        if req.c is not None:
            members = bounds.low_cost_set(t, req.c)
        else:
            members = t.forward[:set_size]
        hit_p = bounds.neighbor_cluster_exists(members, n, req.k,
                                               center_in_set=True)
        hit_q = bounds.neighbor_cluster_exists(members, n, req.k,
                                               center_in_set=False)
        return hit_p, hit_q

    outcomes = _ordered_map(work, list(range(req.trials)),
                            _thread_count(req.threads))
    count_p = sum(1 for p, _ in outcomes if p)
    count_q = sum(1 for _, q in outcomes if q)
    return NeighborStatsResponse(
        meta=_meta("neighbor-stats", req, req.perm),
        n=n, k=req.k, trials=req.trials, set_size=set_size,
        gamma_effective=gamma_eff,
        count_p=count_p, count_q=count_q,
        empirical_p=count_p / req.trials, empirical_q=count_q / req.trials,
        bound=bounds.p_bound(n, req.k, gamma_eff),
        failures=[],
    )

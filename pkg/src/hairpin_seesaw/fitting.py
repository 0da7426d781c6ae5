"""Maximum-likelihood estimation of the seesaw rate constant ``k_t``.

Observations are modelled as ``alpha * signal(t; k) + beta + noise`` with
i.i.d. Gaussian noise of unknown variance.  Profiling out the variance
turns the likelihood into ``n/2 * ln(SSE)``; ``alpha`` and ``beta`` enter
linearly and are profiled exactly by least squares, so only ``k`` is
searched: a log-spaced grid scan followed by golden-section refinement.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .kinetics import DEFAULT_ATOL, DEFAULT_RTOL, SimulationError, fluorescence, integrate
from .motifs import InjectionSchedule, MotifParams, build_hairpin_motif, build_or_gate

MODELS = {"motif": build_hairpin_motif, "orgate": build_or_gate}
DEFAULT_BOUNDS = (1e5, 1e7)
GOLDEN = (math.sqrt(5) - 1) / 2


class FitError(RuntimeError):
    pass


@dataclass
class FitProblem:
    times: np.ndarray
    data: np.ndarray
    schedule: InjectionSchedule
    model: str = "motif"
    params: MotifParams = MotifParams()
    bounds: tuple[float, float] = DEFAULT_BOUNDS
    fit_affine: bool = True
    normalization: str = "none"
    grid_points: int = 25
    output_dt_s: float | None = None
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL
    # simulated signal keyed by (k, efficiencies); may be shared between problems
    cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.data = np.asarray(self.data, dtype=float)
        if self.times.shape != self.data.shape or self.times.ndim != 1:
            raise ValueError("times and data must be 1-D arrays of equal length")
        if len(self.times) < 3:
            raise ValueError("need at least three observations")
        lo, hi = self.bounds
        if not 0 < lo < hi:
            raise ValueError("bounds must satisfy 0 < k_min < k_max")
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        t_end = self.schedule.t_end_s
        if t_end is not None and self.times.max() > t_end * (1 + 1e-12):
            raise ValueError("data extend beyond the simulated horizon")
        if self.output_dt_s is None:
            steps = np.diff(np.unique(self.times))
            self.output_dt_s = float(np.median(steps)) if len(steps) else 1.0

    @property
    def t_end(self) -> float:
        return self.schedule.t_end_s if self.schedule.t_end_s is not None else float(self.times.max())

    def signal(self, k: float, schedule: InjectionSchedule | None = None) -> np.ndarray:
        """Model observable at the data times for ``k_t = k``."""
        sched = schedule or self.schedule
        key = (float(k), sched.per_cycle_efficiency)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        net = MODELS[self.model](replace(self.params, k_t=float(k)))
        try:
            tr = integrate(net, sched, self.t_end, self.output_dt_s, self.rtol, self.atol)
        except SimulationError as e:
            raise SimulationError(f"simulation failed at k={k:.6g}: {e}") from None
        sig = np.interp(self.times, tr.times, fluorescence(tr, self.normalization))
        self.cache[key] = sig
        return sig


@dataclass
class FitResult:
    k_hat: float
    alpha: float
    beta: float
    objective: float
    rms: float
    converged: bool
    evaluations: int
    boundary: bool = False
    degenerate: bool = False
    efficiency: tuple[float, ...] = ()
    grid: list[tuple[float, float]] = field(default_factory=list, repr=False)
    refinement: list[float] = field(default_factory=list, repr=False)


def _affine(sig, y, fit_affine):
    if not fit_affine:
        return 1.0, 0.0
    s_c = sig - sig.mean()
    var = float(s_c @ s_c)
    if var <= 0:
        return 0.0, float(y.mean())
    alpha = max(float(s_c @ (y - y.mean())) / var, 0.0)
    return alpha, float(y.mean() - alpha * sig.mean())


def _sse_floor(y) -> float:
    scale = float(np.max(np.abs(y)))
    return len(y) * max((1e-12 * scale) ** 2, 1e-300)


def profile(k: float, problem: FitProblem, schedule=None):
    """``(nll, alpha, beta, sse, degenerate)`` at ``k``."""
    sig = problem.signal(k, schedule)
    y = problem.data
    alpha, beta = _affine(sig, y, problem.fit_affine)
    r = y - (alpha * sig + beta)
    sse = float(r @ r)
    floor = _sse_floor(y)
    degenerate = sse <= floor
    nll = 0.5 * len(y) * math.log(max(sse, floor))
    return nll, alpha, beta, sse, degenerate


def negative_log_likelihood(k: float, problem: FitProblem) -> float:
    """Gaussian NLL with profiled variance (additive constants dropped)."""
    lo, hi = problem.bounds
    if not lo <= k <= hi:
        raise ValueError(f"k={k:g} outside bounds [{lo:g}, {hi:g}]")
    return profile(k, problem)[0]


def _golden(f, a, b, tol, max_iter=200):
    """Minimise ``f`` on [a, b]; returns (x, fx, evals, best-so-far history)."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    evals = 2
    hist = [min(fc, fd)]
    for _ in range(max_iter):
        if abs(b - a) <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
        evals += 1
        hist.append(min(hist[-1], fc, fd))
    x, fx = (c, fc) if fc <= fd else (d, fd)
    return x, fx, evals, hist, abs(b - a) <= tol


def fit(problem: FitProblem, tol_log10: float = 1e-5, fit_efficiency: bool = False) -> FitResult:
    """Grid scan in log k, then golden-section refinement around the best point.

    With ``fit_efficiency`` one multiplier per cycle is refined afterwards
    by coordinate-wise golden-section search, then ``k`` is refined again.
    """
    lo, hi = (math.log10(b) for b in problem.bounds)
    grid = np.linspace(lo, hi, problem.grid_points)
    values = []
    for g in grid:
        try:
            values.append(profile(10 ** g, problem)[0])
        except SimulationError:
            values.append(math.inf)
    values = np.array(values)
    if not np.any(np.isfinite(values)):
        raise FitError("objective is non-finite over the whole grid")
    i = int(np.argmin(values))
    evals = len(grid)
    sched = problem.schedule

    def refine_k(schedule):
        a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
        return _golden(lambda x: profile(10 ** x, problem, schedule)[0], a, b, tol_log10)

    x, fx, n, hist, conv = refine_k(sched)
    evals += n
    if fx > values[i]:  # never do worse than the best grid point
        x, fx = grid[i], values[i]
    eff = tuple(sched.per_cycle_efficiency)
    if fit_efficiency:
        n_cycles = max((e.cycle for e in sched.events), default=-1) + 1
        eff = list(sched.per_cycle_efficiency) + [1.0] * (n_cycles - len(eff))
        for c in range(n_cycles):
            def f(e, c=c):
                trial = list(eff)
                trial[c] = e
                return profile(10 ** x, problem, sched.with_efficiency(trial))[0]
            e_best, _, n, _, _ = _golden(f, 0.05, 1.0, 1e-4)
            evals += n
            eff[c] = e_best
        sched = sched.with_efficiency(eff)
        x, fx, n, hist2, conv = refine_k(sched)
        evals += n
        hist += hist2
        eff = tuple(eff)
    k_hat = float(10 ** x)
    nll, alpha, beta, sse, degenerate = profile(k_hat, problem, sched)
    boundary = min(abs(x - lo), abs(x - hi)) <= 10 * tol_log10
    return FitResult(k_hat, alpha, beta, nll, math.sqrt(sse / len(problem.data)), conv,
                     evals, boundary, degenerate, eff,
                     list(zip((10 ** grid).tolist(), values.tolist())), hist)


@dataclass
class Diagnostics:
    residuals: np.ndarray
    rms: float
    max_abs: float
    phase_bounds: list[tuple[float, float]]
    phase_rms: list[float]


def residual_diagnostics(result: FitResult, problem: FitProblem) -> Diagnostics:
    """Residuals at the fitted parameters, split into phases at event times."""
    sched = problem.schedule
    if result.efficiency:
        sched = sched.with_efficiency(result.efficiency)
    sig = problem.signal(result.k_hat, sched)
    r = problem.data - (result.alpha * sig + result.beta)
    cuts = [-math.inf] + sched.event_times() + [math.inf]
    bounds, per = [], []
    for a, b in zip(cuts, cuts[1:]):
        m = (problem.times >= a) & (problem.times < b)
        bounds.append((a, b))
        per.append(float(np.sqrt(np.mean(r[m] ** 2))) if m.any() else float("nan"))
    return Diagnostics(r, float(np.sqrt(np.mean(r ** 2))), float(np.max(np.abs(r))),
                       bounds, per)


def write_report(result: FitResult, diag: Diagnostics, path: str | Path, extra=None) -> None:
    def num(v):
        return float(v)

    doc = {
        "k_hat": result.k_hat,
        "alpha": result.alpha,
        "beta": result.beta,
        "nll": result.objective,
        "rms": result.rms,
        "max_abs_residual": diag.max_abs,
        "phase_rms": [num(v) for v in diag.phase_rms],
        "evaluations": result.evaluations,
        "converged": result.converged,
        "boundary": result.boundary,
        "degenerate": result.degenerate,
        "efficiency": [num(v) for v in result.efficiency],
    }
    for key in ("k_hat", "alpha", "beta", "nll", "rms", "max_abs_residual"):
        doc[key] = num(doc[key])
    doc["converged"] = bool(doc["converged"])
    doc["boundary"] = bool(doc["boundary"])
    doc["degenerate"] = bool(doc["degenerate"])
    if extra:
        doc.update(extra)
    Path(path).write_text(yaml.safe_dump(doc, sort_keys=False))

"""Mass-action simulation of reaction networks under injection schedules.

Concentrations are kept in mol/L internally; schedules, configs and CSV
files use nM.  Between injections the ODEs are integrated with an
embedded Dormand-Prince 5(4) pair; each injection dilutes the mixture
(``c1 * v1 = c2 * v2``) and integration restarts from the new state.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import _ode
from .motifs import Injection, InjectionSchedule
from .network import ReactionNetwork

NM = 1e-9
AVOGADRO = 6.02214076e23
DEFAULT_RTOL = 1e-8
DEFAULT_ATOL = 1e-15  # M
MAX_STEPS_PER_SEGMENT = 5_000_000


class SimulationError(RuntimeError):
    """Numerical failure: step-size underflow, step limit, negative state."""


@dataclass(frozen=True)
class SimState:
    time_s: float
    volume_uL: float
    conc: Mapping[str, float]  # M

    def __post_init__(self):
        if self.volume_uL <= 0:
            raise ValueError("volume must be positive")
        bad = [k for k, v in self.conc.items() if v < 0]
        if bad:
            raise ValueError(f"negative concentration for {bad}")

    def nM(self, species: str) -> float:
        return self.conc.get(species, 0.0) / NM


@dataclass
class InjectionRecord:
    injection: Injection
    before: SimState
    after: SimState


@dataclass
class Trace:
    times: np.ndarray
    species: tuple[str, ...]
    conc: np.ndarray            # (n_times, n_species), M
    volumes: np.ndarray         # uL
    fluorescent: tuple[str, ...] = ()
    observable: np.ndarray = field(default=None)
    events: list[InjectionRecord] = field(default_factory=list)
    normalization: str = "none"

    def __post_init__(self):
        n = len(self.times)
        if self.conc.shape != (n, len(self.species)) or len(self.volumes) != n:
            raise ValueError("trace arrays have inconsistent shapes")
        if n > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("trace times must be strictly increasing")
        if self.observable is None:
            self.observable = fluorescence(self, self.normalization)

    def __len__(self):
        return len(self.times)

    def column(self, species: str) -> np.ndarray:
        return self.conc[:, self.species.index(species)]

    def nM(self, species: str) -> np.ndarray:
        return self.column(species) / NM

    @property
    def states(self) -> list[SimState]:
        return [self.state(k) for k in range(len(self.times))]

    def state(self, k: int) -> SimState:
        return SimState(float(self.times[k]), float(self.volumes[k]),
                        dict(zip(self.species, self.conc[k].tolist())))

    def final(self) -> SimState:
        return self.state(len(self.times) - 1)


# --------------------------------------------------------------------------
# network compilation


def compile_network(net: ReactionNetwork, species: Sequence[str] | None = None):
    """Arrays ``(react, prod, rate)`` describing every unidirectional channel."""
    species = tuple(species or net.species)
    index = {s: i for i, s in enumerate(species)}
    chans = net.channels()
    react = np.full((len(chans), 2), -1, dtype=np.int64)
    prod = np.full((len(chans), _ode.MAX_PRODUCTS), -1, dtype=np.int64)
    rate = np.zeros(len(chans))
    for c, (rs, ps, k) in enumerate(chans):
        if len(rs) > 2:
            raise ValueError(f"channel {rs} -> {ps}: at most bimolecular")
        if len(ps) > _ode.MAX_PRODUCTS:
            raise ValueError(f"channel {rs} -> {ps}: too many products")
        try:
            react[c, :len(rs)] = [index[s] for s in rs]
            prod[c, :len(ps)] = [index[s] for s in ps]
        except KeyError as e:
            raise ValueError(f"unknown species {e.args[0]!r}") from None
        rate[c] = k
    return react, prod, rate


def derivatives(state: SimState, net: ReactionNetwork) -> dict[str, float]:
    """Mass-action time derivatives (M/s) of every network species."""
    missing = [s for s in net.species if s not in state.conc]
    if missing:
        raise ValueError(f"state lacks network species {missing}")
    react, prod, rate = compile_network(net)
    y = np.array([state.conc[s] for s in net.species], dtype=float)
    out = np.empty_like(y)
    _ode.rhs(y, react, prod, rate, out)
    return dict(zip(net.species, out.tolist()))


def apply_injection(state: SimState, event: Injection, efficiency: float = 1.0) -> SimState:
    """Dilute ``state`` by adding ``event.volume_uL`` of stock.

    ``efficiency`` scales the effective concentration of the injected
    species (the added volume is unaffected).
    """
    if event.volume_uL <= 0:
        raise ValueError("injection volume must be positive")
    v_new = state.volume_uL + event.volume_uL
    f = state.volume_uL / v_new
    conc = {k: v * f for k, v in state.conc.items()}
    added = event.stock_nM * NM * efficiency * event.volume_uL / v_new
    conc[event.species] = conc.get(event.species, 0.0) + added
    return SimState(state.time_s, v_new, conc)


def initial_state(schedule: InjectionSchedule, species: Sequence[str]) -> SimState:
    conc = {s: 0.0 for s in species}
    for s, c in schedule.initial.items():
        conc[s] = c * NM
    return SimState(0.0, schedule.initial_volume_uL, conc)


def _output_grid(t0, t1, dt):
    k0 = int(np.floor(t0 / dt)) + 1
    k1 = int(np.floor(t1 / dt + 1e-9))
    grid = np.arange(k0, k1 + 1) * dt
    grid = grid[(grid > t0) & (grid < t1 - 1e-9 * max(dt, 1.0))]
    return np.append(grid, t1)


def integrate(net: ReactionNetwork, schedule: InjectionSchedule,
              t_end_s: float | None = None, output_dt_s: float = 1.0,
              rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
              normalization: str = "none",
              fluorescent: Sequence[str] | None = None) -> Trace:
    """Integrate ``net`` from the schedule's initial mixture to ``t_end_s``.

    Snapshots are taken at multiples of ``output_dt_s`` and at every event
    time (after the injection).  Injected species outside the network are
    carried along as inert.
    """
    t_end = schedule.t_end_s if t_end_s is None else t_end_s
    if t_end is None:
        raise ValueError("no end time given")
    if output_dt_s <= 0:
        raise ValueError("output_dt must be positive")
    if schedule.events and t_end < schedule.events[-1].time_s:
        raise ValueError("t_end precedes the last injection")
    species = list(net.species)
    for s in list(schedule.initial) + [e.species for e in schedule.events]:
        if s not in species:
            species.append(s)
    species = tuple(species)
    react, prod, rate = compile_network(net, species)
    if fluorescent is None:
        fluorescent = default_fluorescent(net)

    state = initial_state(schedule, species)
    y = np.array([state.conc[s] for s in species])
    volume = schedule.initial_volume_uL
    times, rows, vols, records = [0.0], [y.copy()], [volume], []
    pending = list(schedule.events)
    t = 0.0
    h = 0.0
    boundaries = sorted({e.time_s for e in pending if e.time_s > 0} | {t_end})
    # injections at t = 0 are part of the initial mixture
    while pending and pending[0].time_s <= 0:
        y, volume = _inject(y, volume, pending.pop(0), schedule, species, 0.0, records)
        rows[0] = y.copy()
        vols[0] = volume
    for tb in boundaries:
        if tb <= t:
            continue
        grid = _output_grid(t, tb, output_dt_s)
        Y, y_end, status, h, _ = _ode.dopri_segment(y, t, grid, react, prod, rate,
                                             rtol, atol, h, MAX_STEPS_PER_SEGMENT)
        if status == _ode.UNDERFLOW:
            raise SimulationError(f"step size underflow near t={t:g} s (stiff system?)")
        if status == _ode.TOO_MANY_STEPS:
            raise SimulationError(f"step limit exceeded between t={t:g} and {tb:g} s")
        if np.any(Y < -atol):
            raise SimulationError("negative concentration beyond tolerance")
        y = y_end
        t = tb
        while pending and pending[0].time_s <= t:
            y, volume = _inject(y, volume, pending.pop(0), schedule, species, t, records)
            h = 0.0  # restart step-size selection after a discontinuity
        Y[-1] = np.maximum(y, 0.0)
        times.extend(grid.tolist())
        rows.extend(Y)
        vols.extend([vols[-1]] * (len(grid) - 1) + [volume])
    return Trace(np.array(times), species, np.array(rows), np.array(vols),
                 tuple(fluorescent), None, records, normalization)


def _inject(y, volume, ev, schedule, species, t, records):
    before = SimState(t, volume, dict(zip(species, np.maximum(y, 0.0).tolist())))
    after = apply_injection(before, ev, schedule.efficiency(ev.cycle))
    records.append(InjectionRecord(ev, before, after))
    # dilute the unclipped working state so amounts are carried over exactly
    k = species.index(ev.species)
    added = after.conc[ev.species] - before.conc[ev.species] * volume / after.volume_uL
    y = y * (volume / after.volume_uL)
    y[k] += added
    return y, after.volume_uL


# --------------------------------------------------------------------------
# observable


def default_fluorescent(net: ReactionNetwork) -> tuple[str, ...]:
    """Dye-bearing species whose dye is not quenched within the complex."""
    if not net.complexes:
        return ()
    return tuple(net.fluorescent_species())


def parse_normalization(norm) -> tuple[str, float | None]:
    if isinstance(norm, tuple):
        mode, val = norm
    else:
        text = str(norm).strip().lower()
        if text.startswith("fixed"):
            body = text[5:].strip(" :()=")
            if not body:
                raise ValueError("fixed normalization needs a maximum in nM")
            mode, val = "fixed", float(body)
        else:
            mode, val = text, None
    if mode not in ("none", "minmax", "fixed"):
        raise ValueError(f"unknown normalization {norm!r}")
    if mode == "fixed" and not val > 0:
        raise ValueError("fixed normalization maximum must be > 0")
    return mode, val


def raw_signal(trace: Trace) -> np.ndarray:
    """Summed concentration (nM) of the fluorescent species."""
    out = np.zeros(len(trace.times))
    for s in trace.fluorescent:
        if s in trace.species:
            out += trace.nM(s)
    return out


def fluorescence(trace: Trace, normalization="none") -> np.ndarray:
    """Observable from a trace.

    ``none`` returns the raw signal in nM; ``minmax`` rescales the trace to
    [0, 1]; ``fixed:<nM>`` divides by the given maximum.
    """
    if len(trace.times) == 0:
        raise ValueError("empty trace")
    mode, val = parse_normalization(normalization)
    raw = raw_signal(trace)
    if mode == "none":
        return raw
    if mode == "fixed":
        return raw / val
    lo, hi = raw.min(), raw.max()
    if hi - lo <= 0:
        return np.zeros_like(raw)
    return (raw - lo) / (hi - lo)


def strand_totals(trace: Trace, net: ReactionNetwork) -> dict[str, np.ndarray]:
    """Census-weighted totals (M) of every elementary strand over time."""
    totals: dict[str, np.ndarray] = {}
    for s in trace.species:
        if s not in net.complexes:
            continue
        col = trace.column(s)
        for strand, n in net.census(s).items():
            totals[strand] = totals.get(strand, 0.0) + n * col
    return totals


# --------------------------------------------------------------------------
# stochastic oracle


@dataclass
class SSATrajectory:
    times: np.ndarray
    species: tuple[str, ...]
    counts: np.ndarray  # (n_times, n_species), integer

    def column(self, species: str) -> np.ndarray:
        return self.counts[:, self.species.index(species)]


def ssa_simulate(net: ReactionNetwork, initial_counts: Mapping[str, int],
                 volume_L: float, t_end: float, seed: int,
                 sample_times: Sequence[float] | None = None,
                 chunk: int = 1 << 16) -> SSATrajectory:
    """Exact (direct-method) stochastic trajectory sampled on a time grid.

    Bimolecular constants are converted to propensities ``k/(N_A V)``;
    identical reactants use ``k/(N_A V) * n * (n - 1)``.
    """
    if volume_L <= 0:
        raise ValueError("volume must be positive")
    if any(int(v) != v or v < 0 for v in initial_counts.values()):
        raise ValueError("initial counts must be non-negative integers")
    species = tuple(net.species)
    react, prod, rate = compile_network(net)
    order = (react >= 0).sum(axis=1)
    rate = np.where(order == 2, rate / (AVOGADRO * volume_L), rate)
    x = np.zeros(len(species), dtype=np.int64)
    for s, n in initial_counts.items():
        if s not in species:
            raise ValueError(f"unknown species {s!r}")
        x[species.index(s)] = int(n)
    if sample_times is None:
        sample_times = np.linspace(0.0, t_end, 101)
    sample_times = np.asarray(sample_times, dtype=float)
    out = np.zeros((len(sample_times), len(species)), dtype=np.int64)
    rng = np.random.default_rng(seed)
    t, k = 0.0, 0
    while True:
        u = 1.0 - rng.random(chunk)  # (0, 1]
        t, k, used = _ode.ssa_run(x, t, t_end, react, prod, rate, sample_times, out, k, u)
        if used > chunk:
            break
    for i in range(k, len(sample_times)):
        out[i] = x
    return SSATrajectory(sample_times, species, out)

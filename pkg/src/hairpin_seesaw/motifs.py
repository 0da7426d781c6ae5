"""Curated hairpin-seesaw gate networks and injection protocols.

Domain layout of one gate (5' to 3')::

    gate    T1  Sg  T1* So  T2  Sg*     hairpin: Sg pairs Sg*, loop T1* So T2
    input   Sg* T1* Ai  Ti
    fuel    Tf  Af  T1  Sg*
    Iex     Ti* Ai* T1  Sg  Ai          hairpin: Ai* pairs Ai, loop T1 Sg
    Fex     Af  Sg  T1* Af* Tf*         hairpin: Af pairs Af*, loop Sg T1*
    Q       So                          reporter top, carries the quencher
    Rb      T2* So*                     reporter bottom, carries the dye

The loop toeholds T1* and T2 share two complementary bases, which keeps
them partly sequestered while the hairpin is closed.

Species names use ``.`` for bound complexes (``G.I`` is the gate-input
complex).  OR-gate species carry the gate number (``G1.I1``, ``I2ex``).
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .domains import (BRANCH, DEFAULT_BRANCH_NT, DEFAULT_TOEHOLD_NT, TOEHOLD,
                      Complex, DomainCatalog, canonicalize)
from .network import Reaction, ReactionNetwork

UNIT_NM = 100.0            # the protocol's "1x"
INITIAL_VOLUME_UL = 80.0
STOCK_LEVELS_NM = (1e3, 1e4, 1e5)
MAX_ADDITION_UL = 4.0

# Converts a /M/s constant to the numerically equal /s constant in nM units.
NM = 1e-9


@dataclass(frozen=True)
class MotifParams:
    k_t: float = 2.743e6
    k_rep: float = 1.3e6
    k_leak: float = 0.0
    collapse_reclosure: bool = True
    k_close: float = 1.0
    # first-order reverse of gate opening; None means k_t * 1 nM
    k_unopen: float | None = None

    def __post_init__(self):
        for name in ("k_t", "k_rep", "k_leak", "k_close"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.k_unopen is not None and self.k_unopen < 0:
            raise ValueError("k_unopen must be >= 0")

    @property
    def k_unopen_eff(self) -> float:
        return self.k_t * NM if self.k_unopen is None else self.k_unopen


def motif_catalog(tags=("",), branch_nt: int = DEFAULT_BRANCH_NT,
                  toehold_nt: int = DEFAULT_TOEHOLD_NT) -> DomainCatalog:
    specs = [("T1", toehold_nt, TOEHOLD), ("T2", toehold_nt, TOEHOLD),
             ("So", branch_nt, BRANCH)]
    for t in tags:
        specs += [(f"Sg{t}", branch_nt, BRANCH), (f"Ai{t}", branch_nt, BRANCH),
                  (f"Af{t}", branch_nt, BRANCH), (f"Ti{t}", toehold_nt, TOEHOLD),
                  (f"Tf{t}", toehold_nt, TOEHOLD)]
    return DomainCatalog.from_specs(specs, partial=[("T1*", "T2", 2)])


def _names(t: str) -> dict[str, str]:
    g, i, f = f"G{t}", f"I{t}", f"F{t}"
    return {
        "G": g, "I": i, "F": f, "GI": f"{g}.{i}", "GF": f"{g}.{f}",
        "GIR": f"{g}.{i}.Rb", "GFR": f"{g}.{f}.Rb", "Iex": f"I{t}ex",
        "Fex": f"F{t}ex", "Wi": f"Wi{t}", "Wf": f"Wf{t}", "Go": f"Go{t}",
        "GR": f"{g}.Rb",
    }


def reporter_species(cat: DomainCatalog) -> dict[str, Complex]:
    top = cat.strand("reporter_top", ["So"])
    bottom = cat.strand("reporter_bottom", ["T2*", "So*"])
    return {
        "R": Complex((bottom, top), {((0, 1), (1, 0))}),
        "Q": Complex.single(top),
        "Rb": Complex.single(bottom),
    }


def gate_species(cat: DomainCatalog, tag: str = "") -> dict[str, Complex]:
    """Hand-built complexes for one gate, keyed by species name."""
    t = tag
    n = _names(t)
    gate = cat.strand(f"gate{t}", ["T1", f"Sg{t}", "T1*", "So", "T2", f"Sg{t}*"])
    inp = cat.strand(f"input{t}", [f"Sg{t}*", "T1*", f"Ai{t}", f"Ti{t}"])
    fuel = cat.strand(f"fuel{t}", [f"Tf{t}", f"Af{t}", "T1", f"Sg{t}*"])
    iex = cat.strand(f"input_extractor{t}",
                     [f"Ti{t}*", f"Ai{t}*", "T1", f"Sg{t}", f"Ai{t}"])
    fex = cat.strand(f"fuel_extractor{t}",
                     [f"Af{t}", f"Sg{t}", "T1*", f"Af{t}*", f"Tf{t}*"])
    rb = cat.strand("reporter_bottom", ["T2*", "So*"])

    on_rb = {((0, 4), (2, 0)), ((0, 3), (2, 1))}
    gi = {((0, 0), (1, 1)), ((0, 1), (1, 0))}
    gf = {((0, 2), (1, 2)), ((0, 1), (1, 3))}
    return {
        n["G"]: Complex((gate,), {((0, 1), (0, 5))}),
        n["I"]: Complex.single(inp),
        n["F"]: Complex.single(fuel),
        n["GI"]: Complex((gate, inp), gi),
        n["GF"]: Complex((gate, fuel), gf),
        n["GIR"]: Complex((gate, inp, rb), gi | on_rb),
        n["GFR"]: Complex((gate, fuel, rb), gf | on_rb),
        n["Iex"]: Complex((iex,), {((0, 1), (0, 4))}),
        n["Fex"]: Complex((fex,), {((0, 0), (0, 3))}),
        n["Wi"]: Complex((inp, iex), {((0, 3), (1, 0)), ((0, 2), (1, 1)),
                                      ((0, 1), (1, 2)), ((0, 0), (1, 3))}),
        n["Wf"]: Complex((fuel, fex), {((0, 0), (1, 4)), ((0, 1), (1, 3)),
                                       ((0, 2), (1, 2)), ((0, 3), (1, 1))}),
        n["Go"]: Complex.single(gate),
        n["GR"]: Complex((gate, rb), {((0, 4), (1, 0)), ((0, 3), (1, 1))}),
    }


def species_catalog(tags=("",)) -> dict[str, Complex]:
    """Canonicalized complexes for every named species of the given gates."""
    cat = motif_catalog(tags)
    raw = dict(reporter_species(cat))
    for t in tags:
        raw.update(gate_species(cat, t))
    return {name: canonicalize(c, {c.key: name}) for name, c in raw.items()}


def name_table(tags=("",)) -> dict[str, str]:
    """Canonical key -> species name."""
    return {c.key: name for name, c in species_catalog(tags).items()}


def _gate_reactions(p: MotifParams, t: str) -> tuple[list[str], list[Reaction]]:
    n = _names(t)
    G, I, F = n["G"], n["I"], n["F"]
    GI, GF, GIR, GFR = n["GI"], n["GF"], n["GIR"], n["GFR"]
    Iex, Fex, Wi, Wf = n["Iex"], n["Fex"], n["Wi"], n["Wf"]
    kt = p.k_t
    rx = [
        Reaction((G, I), (GI,), kt, p.k_unopen_eff, "R1", "exchange"),
        Reaction((GI, F), (GF, I), kt, kt, "R2", "exchange"),
        Reaction((GI, "R"), (GIR, "Q"), p.k_rep, None, "R3", "report"),
        Reaction((GF, "R"), (GFR, "Q"), p.k_rep, None, "R4", "report"),
        Reaction((Iex, I), (Wi,), kt, None, "R5", "extract"),
        Reaction((Fex, F), (Wf,), kt, None, "R6", "extract"),
    ]
    extra = []
    if p.collapse_reclosure:
        rx += [
            Reaction((Iex, GI), (G, Wi), kt, None, "R7", "extract"),
            Reaction((Fex, GF), (G, Wf), kt, None, "R8", "extract"),
            Reaction((Iex, GIR), (G, "Rb", Wi), kt, None, "R9", "extract"),
            Reaction((Fex, GFR), (G, "Rb", Wf), kt, None, "R10", "extract"),
        ]
    else:
        Go, GR = n["Go"], n["GR"]
        extra = [Go, GR]
        rx += [
            Reaction((Iex, GI), (Go, Wi), kt, None, "R7", "extract"),
            Reaction((Fex, GF), (Go, Wf), kt, None, "R8", "extract"),
            Reaction((Iex, GIR), (GR, Wi), kt, None, "R9", "extract"),
            Reaction((Fex, GFR), (GR, Wf), kt, None, "R10", "extract"),
            Reaction((Go,), (G,), p.k_close, None, "C1", "reclose"),
            Reaction((GR,), (G, "Rb"), p.k_close, None, "C2", "reclose"),
        ]
    if p.k_leak > 0:
        rx.append(Reaction((G, F), (GF,), p.k_leak, None, "L1", "leak"))
    species = [G, I, F, GI, GF, GIR, GFR, Iex, Fex, Wi, Wf] + extra
    return species, rx


def _assemble(p: MotifParams, tags) -> ReactionNetwork:
    cat = species_catalog(tags)
    species = ["R", "Q", "Rb"]
    rxns: list[Reaction] = []
    for t in tags:
        sp, rx = _gate_reactions(p, t)
        species += sp
        rxns += rx
    rxns.append(Reaction(("Rb", "Q"), ("R",), p.k_t, None, "R11", "restore"))
    # order: gate-side species first, shared reporter species after R
    order = sorted(species, key=_species_rank)
    return ReactionNetwork(tuple(order), tuple(rxns), {s: cat[s] for s in order})


_RANK = ["G", "I", "F", "R", "G.I", "G.F", "G.I.Rb", "G.F.Rb", "Q", "Rb",
         "Iex", "Fex", "Wi", "Wf", "Go", "G.Rb"]


def _species_rank(name: str):
    m = re.search(r"(\d)", name)
    tag = m.group(1) if m else ""
    generic = name.replace(tag, "") if tag else name
    return (_RANK.index(generic) if generic in _RANK else len(_RANK),
            tag, name)


def build_hairpin_motif(p: MotifParams | None = None) -> ReactionNetwork:
    return _assemble(p or MotifParams(), ("",))


def build_or_gate(p: MotifParams | None = None) -> ReactionNetwork:
    """Two gates in parallel sharing one reporter (R, Rb, Q)."""
    return _assemble(p or MotifParams(), ("1", "2"))


# --------------------------------------------------------------------------
# injection schedules


@dataclass(frozen=True)
class Injection:
    time_s: float
    species: str
    stock_nM: float
    volume_uL: float
    cycle: int = 0

    def __post_init__(self):
        if self.volume_uL <= 0:
            raise ValueError(f"injection of {self.species}: volume must be > 0")
        if self.stock_nM < 0:
            raise ValueError(f"injection of {self.species}: negative stock")


@dataclass(frozen=True)
class InjectionSchedule:
    initial_volume_uL: float
    initial: dict[str, float]
    events: tuple[Injection, ...] = ()
    per_cycle_efficiency: tuple[float, ...] = ()
    t_end_s: float | None = None
    # (time, text) boundaries used for plotting and case bookkeeping
    marks: tuple[tuple[float, str], ...] = field(default=(), compare=False)

    def __post_init__(self):
        if self.initial_volume_uL <= 0:
            raise ValueError("initial volume must be positive")
        times = [e.time_s for e in self.events]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("injection times must be non-decreasing")
        if any(not (0 < x <= 1) for x in self.per_cycle_efficiency):
            raise ValueError("per-cycle efficiencies must lie in (0, 1]")
        if self.t_end_s is not None and times and self.t_end_s < times[-1]:
            raise ValueError("t_end precedes the last injection")

    def efficiency(self, cycle: int) -> float:
        if cycle < len(self.per_cycle_efficiency):
            return self.per_cycle_efficiency[cycle]
        return 1.0

    def event_times(self) -> list[float]:
        return sorted({e.time_s for e in self.events})

    def with_efficiency(self, eff) -> "InjectionSchedule":
        return InjectionSchedule(self.initial_volume_uL, dict(self.initial), self.events,
                                 tuple(eff), self.t_end_s, self.marks)

    def scaled_initial(self, **conc_nM) -> "InjectionSchedule":
        init = dict(self.initial)
        init.update(conc_nM)
        return InjectionSchedule(self.initial_volume_uL, init, self.events,
                                 self.per_cycle_efficiency, self.t_end_s, self.marks)


def stock_for(multiplier: float, unit_nM: float = UNIT_NM,
              volume_uL: float = INITIAL_VOLUME_UL) -> tuple[float, float]:
    """Pick a stock level and pipetting volume delivering ``multiplier`` x.

    The amount is nominal with respect to the reaction volume
    (``conc_1 * v_1 = conc_2 * v_2``); the smallest stock that keeps the
    addition at or below ``MAX_ADDITION_UL`` is used.
    """
    target = multiplier * unit_nM
    for stock in STOCK_LEVELS_NM:
        v = target * volume_uL / stock
        if v <= MAX_ADDITION_UL:
            return stock, v
    stock = STOCK_LEVELS_NM[-1]
    return stock, target * volume_uL / stock


def renewal_multipliers(n_cycles: int, doubling: bool = True,
                        rule: str = "equalize") -> list[tuple[str, float, float]]:
    """Insert multipliers as ``(phase, first, second)`` in protocol order.

    ``phase`` is ``"forward"`` (input, fuel) or ``"reverse"`` (input
    extractor, fuel extractor).  With ``rule="equalize"`` both extractors are
    dosed at twice the preceding input and both strands of a later forward
    phase at twice the preceding extractors; ``rule="ratio"`` keeps the fuel
    (and fuel extractor) at twice the input level throughout.
    """
    if n_cycles < 1:
        raise ValueError("n_cycles must be >= 1")
    if rule not in ("equalize", "ratio"):
        raise ValueError(f"unknown doubling rule {rule!r}")
    out = []
    i, f = 1.0, 2.0
    for _ in range(n_cycles):
        out.append(("forward", i, f))
        if rule == "equalize":
            ie = fe = 2 * i
        else:
            ie, fe = 2 * i, 2 * f
        out.append(("reverse", ie, fe))
        if doubling:
            i, f = 2 * ie, 2 * fe
    return out


def build_renewal_schedule(n_cycles: int, phase_duration_s: float,
                           doubling: bool = True, rule: str = "equalize",
                           efficiency=(), unit_nM: float = UNIT_NM,
                           volume_uL: float = INITIAL_VOLUME_UL) -> InjectionSchedule:
    """Gate 1x and reporter 1.5x, then alternating insert/extract phases.

    The first insertion happens one phase after mixing so the trace opens
    with a baseline.
    """
    if phase_duration_s <= 0:
        raise ValueError("phase duration must be positive")
    events = []
    marks = [(0.0, "G+R")]
    for k, (phase, a, b) in enumerate(renewal_multipliers(n_cycles, doubling, rule)):
        t = (k + 1) * phase_duration_s
        cycle = k // 2
        names = ("I", "F") if phase == "forward" else ("Iex", "Fex")
        for sp, mult in zip(names, (a, b)):
            stock, v = stock_for(mult, unit_nM, volume_uL)
            events.append(Injection(t, sp, stock, v, cycle))
        label = f"{names[0]} {a:g}x / {names[1]} {b:g}x"
        marks.append((t, label))
    t_end = (2 * n_cycles + 1) * phase_duration_s
    return InjectionSchedule(volume_uL, {"G": unit_nM, "R": 1.5 * unit_nM},
                             tuple(events), tuple(efficiency), t_end, tuple(marks))


def build_or_case_schedule(cases, phase_duration_s: float, unit_nM: float = UNIT_NM,
                           volume_uL: float = INITIAL_VOLUME_UL,
                           efficiency=()) -> InjectionSchedule:
    """Sequential OR-gate cases with a restoration phase after each.

    Each case gets a compute phase and a restore phase.  Present inputs are
    added with their fuel (1x input, 2x fuel the first time; afterwards at
    twice the last extractor dose, so leftover extractor cannot swallow the
    new input).  The restore phase adds extractors at 2x of every input and
    fuel added in that case.
    """
    cases = [tuple(bool(x) for x in c) for c in cases]
    if not cases:
        raise ValueError("case list must not be empty")
    if any(len(c) != 2 for c in cases):
        raise ValueError("each case needs exactly two input values")
    if phase_duration_s <= 0:
        raise ValueError("phase duration must be positive")
    last_extract: dict[str, float] = {}
    events = []
    marks = [(0.0, "G1+G2+R")]
    t = phase_duration_s
    for ci, case in enumerate(cases):
        bits = "".join("ON" if b else "OFF" for b in case)
        marks.append((t, f"case {ci + 1}: {bits}"))
        added = []
        for j, on in enumerate(case, start=1):
            if not on:
                continue
            for sp, base in ((f"I{j}", 1.0), (f"F{j}", 2.0)):
                ex = f"{sp}ex"
                mult = 2 * last_extract[ex] if ex in last_extract else base
                stock, v = stock_for(mult, unit_nM, volume_uL)
                events.append(Injection(t, sp, stock, v, ci))
                added.append((sp, mult))
        t += phase_duration_s
        marks.append((t, "restore"))
        for sp, mult in added:
            ex = f"{sp}ex"
            last_extract[ex] = 2 * mult
            stock, v = stock_for(2 * mult, unit_nM, volume_uL)
            events.append(Injection(t, ex, stock, v, ci))
        t += phase_duration_s
    init = {"G1": unit_nM, "G2": unit_nM, "R": 1.5 * unit_nM}
    return InjectionSchedule(volume_uL, init, tuple(events), tuple(efficiency), t,
                             tuple(marks))


def case_windows(schedule: InjectionSchedule) -> list[tuple[str, float, float]]:
    """(label, compute start, compute end) for each OR case of a schedule."""
    out = []
    marks = list(schedule.marks)
    for (t0, lab), (t1, _) in zip(marks, marks[1:]):
        if lab.startswith("case"):
            out.append((lab, t0, t1))
    return out

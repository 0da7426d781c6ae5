import numpy as np
import pytest

from hairpin_seesaw.kinetics import (AVOGADRO, NM, SimState, SimulationError, apply_injection,
                                     derivatives, fluorescence, integrate, ssa_simulate,
                                     strand_totals)
from hairpin_seesaw.motifs import (Injection, InjectionSchedule, MotifParams,
                                   build_hairpin_motif, build_renewal_schedule)
from hairpin_seesaw.network import Reaction, ReactionNetwork

ABC = ReactionNetwork(("A", "B", "C"), (Reaction(("A", "B"), ("C",), 1e6),))


def _closed(c0_nM, k, t):
    c0 = c0_nM * NM
    return (c0 - c0 / (1 + k * c0 * t)) / NM


def test_derivative_direct_product():
    d = derivatives(SimState(0, 80, {"A": 1e-7, "B": 1e-7, "C": 0.0}), ABC)
    assert d["C"] == pytest.approx(1e-8) and d["A"] == pytest.approx(-1e-8)


def test_derivative_zero_state():
    d = derivatives(SimState(0, 80, {"A": 0.0, "B": 0.0, "C": 0.0}), ABC)
    assert all(v == 0 for v in d.values())


def test_derivative_unknown_species():
    with pytest.raises(ValueError, match="lacks"):
        derivatives(SimState(0, 80, {"A": 1.0}), ABC)


def test_reversible_equilibrium_zero_rate():
    net = ReactionNetwork(("A", "B"), (Reaction(("A",), ("B",), 2.0, 0.5),))
    d = derivatives(SimState(0, 1, {"A": 1e-7, "B": 4e-7}), net)
    assert abs(d["A"]) < 1e-20 and abs(d["B"]) < 1e-20


def test_injection_dilution():
    s = SimState(0, 80, {"X": 100 * NM})
    s2 = apply_injection(s, Injection(0, "buffer", 0.0, 20.0))
    assert s2.nM("X") == pytest.approx(80.0) and s2.volume_uL == 100
    s3 = apply_injection(s, Injection(0, "I", 1e4, 0.8))
    assert s3.nM("I") == pytest.approx(1e4 * 0.8 / 80.8)
    assert s3.nM("X") == pytest.approx(100 * 80 / 80.8)
    assert s3.time_s == 0


def test_injection_rejects_nonpositive_volume():
    with pytest.raises(ValueError):
        Injection(0, "I", 1.0, 0.0)


def test_analytic_second_order():
    tr = integrate(ABC, InjectionSchedule(80.0, {"A": 100, "B": 100}, t_end_s=10.0),
                   output_dt_s=0.5)
    expected = _closed(100, 1e6, tr.times)
    assert np.allclose(tr.nM("C"), expected, rtol=1e-6, atol=1e-9)
    assert tr.nM("C")[-1] == pytest.approx(50.0, rel=1e-3)


def test_empty_network_constant():
    net = ReactionNetwork(("A",), ())
    tr = integrate(net, InjectionSchedule(80.0, {"A": 5.0}, t_end_s=3.0), output_dt_s=1.0)
    assert np.all(tr.nM("A") == 5.0)


def test_snapshots_include_event_times():
    sched = InjectionSchedule(80.0, {"A": 10.0}, (Injection(2.5, "B", 1000.0, 1.0),), t_end_s=5.0)
    tr = integrate(ABC, sched, output_dt_s=1.0)
    assert list(tr.times) == [0, 1, 2, 2.5, 3, 4, 5]
    k = list(tr.times).index(2.5)
    assert tr.nM("B")[k] == pytest.approx(1000.0 / 81.0)  # post-injection state
    assert tr.volumes[k - 1] == 80.0 and tr.volumes[k] == 81.0


def test_inert_injected_species_carried():
    sched = InjectionSchedule(80.0, {"A": 1.0}, (Injection(1.0, "Z", 100.0, 1.0),), t_end_s=2.0)
    tr = integrate(ABC, sched, output_dt_s=1.0)
    assert "Z" in tr.species and tr.nM("Z")[-1] == pytest.approx(100 / 81)


def test_rejects_bad_arguments():
    sched = InjectionSchedule(80.0, {"A": 1.0}, t_end_s=2.0)
    with pytest.raises(ValueError):
        integrate(ABC, sched, output_dt_s=0.0)


def test_stiffness_reported():
    net = build_hairpin_motif(MotifParams(k_t=1e30))
    with pytest.raises(SimulationError):
        integrate(net, build_renewal_schedule(1, 100.0), output_dt_s=10.0, rtol=1e-12)


def test_conservation_and_non_negativity():
    net = build_hairpin_motif()
    sched = build_renewal_schedule(2, 1800.0)
    tr = integrate(net, sched, output_dt_s=30.0)
    assert tr.conc.min() >= -1e-15
    tot = strand_totals(tr, net)
    amounts = {s: v * tr.volumes for s, v in tot.items()}
    # amounts only change by what the injections add
    added = {}
    for rec in tr.events:
        for s, n in net.census(rec.injection.species).items():
            added[s] = added.get(s, 0.0) + rec.injection.stock_nM * NM * rec.injection.volume_uL
    for s, a in amounts.items():
        assert a[-1] == pytest.approx(a[0] + added.get(s, 0.0), rel=1e-7)


def test_convergence_under_refinement():
    net = build_hairpin_motif()
    sched = build_renewal_schedule(1, 600.0)
    a = integrate(net, sched, output_dt_s=10.0).final()
    b = integrate(net, sched, output_dt_s=5.0, rtol=1e-9, atol=1e-16).final()
    # species that have decayed to ~0 are compared on a 10 pM floor
    for s in net.species:
        assert abs(a.conc[s] - b.conc[s]) <= 1e-4 * max(abs(b.conc[s]), 1e-11)


def test_symmetric_exchange_equilibrates():
    net = ReactionNetwork(("G", "I", "GI"), (Reaction(("G", "I"), ("GI",), 1e6, 1e6 * NM),))
    tr = integrate(net, InjectionSchedule(80.0, {"G": 100, "I": 100}, t_end_s=2e5),
                   output_dt_s=1e4)
    d = derivatives(tr.final(), net)
    assert max(abs(v) for v in d.values()) < 1e-12


def test_fluorescence_modes():
    net = build_hairpin_motif()
    tr = integrate(net, build_renewal_schedule(1, 600.0), output_dt_s=10.0)
    raw = fluorescence(tr, "none")
    assert raw[0] == 0.0
    expect = tr.nM("G.I.Rb") + tr.nM("G.F.Rb") + tr.nM("Rb")
    assert np.allclose(raw, expect)
    assert np.allclose(fluorescence(tr, "fixed:150"), expect / 150)
    mm = fluorescence(tr, "minmax")
    assert mm.min() == 0.0 and mm.max() == 1.0
    with pytest.raises(ValueError):
        fluorescence(tr, "fixed:0")


def test_fully_triggered_reporter_is_one():
    net = build_hairpin_motif()
    tr = integrate(net, InjectionSchedule(80.0, {"Rb": 150.0}, t_end_s=1.0), output_dt_s=1.0)
    assert fluorescence(tr, "fixed:150")[0] == pytest.approx(1.0)


def test_ssa_zero_and_determinism():
    v = 1e4 / (AVOGADRO * 1e-7)
    flat = ssa_simulate(ABC, {}, v, 5.0, seed=1)
    assert flat.counts.sum() == 0
    a = ssa_simulate(ABC, {"A": 500, "B": 500}, v, 5.0, seed=3)
    b = ssa_simulate(ABC, {"A": 500, "B": 500}, v, 5.0, seed=3)
    assert np.array_equal(a.counts, b.counts)
    assert np.all(a.column("A") + a.column("C") == 500)


def test_ssa_dimerisation_propensity():
    # 2A -> B: d<n>/dt ~ -2 k/(N_A V) n^2 for large n
    net = ReactionNetwork(("A", "B"), (Reaction(("A", "A"), ("B",), 1e6),))
    v = 1e4 / (AVOGADRO * 1e-7)
    runs = [ssa_simulate(net, {"A": 10000}, v, 5.0, seed=s, sample_times=[5.0]).counts[0, 0]
            for s in range(10)]
    ode = integrate(net, InjectionSchedule(80.0, {"A": 100.0}, t_end_s=5.0), output_dt_s=5.0)
    assert np.mean(runs) == pytest.approx(ode.nM("A")[-1] * 100, rel=0.02)

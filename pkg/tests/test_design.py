import pytest
from hypothesis import given, settings, strategies as st

from hairpin_seesaw.design import (DesignConstraints, DesignError, SequenceAssignment,
                                   assign_sequences, complementary_run, crosstalk_score,
                                   junction_overlap, longest_homopolymer, revcomp, validate)
from hairpin_seesaw.domains import BRANCH, TOEHOLD, DomainCatalog
from hairpin_seesaw.motifs import motif_catalog

CAT = motif_catalog()


def test_primitives():
    assert revcomp("ACTTC") == "GAAGT"
    assert longest_homopolymer("ACCCCT") == 4
    assert complementary_run("AAAAC", "GTTTT") == 5
    assert junction_overlap("TGAGA", "ACCCA") == 2


def test_default_assignment_valid():
    a = assign_sequences(CAT, seed=1)
    assert validate(a).ok
    assert len(a["T1"]) == 5 and set(a["T1"]) <= set("ACT")


def test_deterministic_per_seed():
    assert assign_sequences(CAT, seed=7).sequences == assign_sequences(CAT, seed=7).sequences
    assert assign_sequences(CAT, seed=7).sequences != assign_sequences(CAT, seed=8).sequences


def test_unsatisfiable_names_constraint():
    with pytest.raises(DesignError, match="homopolymer"):
        assign_sequences(CAT, DesignConstraints(max_homopolymer=0, max_restarts=2,
                                                attempts_per_domain=20))


def _with(a, **changes):
    seqs = dict(a.sequences)
    for name, s in changes.items():
        seqs[name] = s
        seqs[CAT[name].complement_of] = revcomp(s)
    return SequenceAssignment(CAT, seqs)


def test_g_in_sense_domain_fails():
    a = assign_sequences(CAT, seed=1)
    bad = _with(a, So="G" + a["So"][1:])
    assert bad.sequences["So"].startswith("G")
    assert validate(bad).checks["g_confinement"]


def test_complement_with_g_passes():
    a = assign_sequences(CAT, seed=1)
    assert "G" in "".join(a[n] for n in CAT.names() if n.endswith("*"))
    assert not validate(a).checks["g_confinement"]


def test_three_base_overlap_fails():
    a = assign_sequences(CAT, seed=1)
    t1 = a["T1"]
    t2 = a["T2"][:2] + t1[2:]  # T1*/T2 now complementary over 3 bases
    bad = _with(a, T2=t2)
    assert junction_overlap(bad["T1*"], bad["T2"]) >= 3
    assert validate(bad).checks["junction_overlap"]


def test_planted_collision_scores_domain_length():
    cat = DomainCatalog.from_specs([("x", 12, BRANCH), ("y", 12, BRANCH)])
    x = "ACTTACCATTCA"
    a = SequenceAssignment(cat, {"x": x, "x*": revcomp(x), "y": revcomp(x), "y*": x})
    assert crosstalk_score(a) == 12


def test_single_domain_catalog_scores_zero():
    cat = DomainCatalog.from_specs([("t", 5, TOEHOLD)])
    a = assign_sequences(cat, seed=0)
    assert crosstalk_score(a) == 0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_property_valid_and_low_crosstalk(seed):
    a = assign_sequences(CAT, seed=seed)
    assert validate(a).ok
    assert crosstalk_score(a) <= 5


def test_crosstalk_invariant_to_order():
    a = assign_sequences(CAT, seed=3)
    rev = SequenceAssignment(CAT, dict(reversed(list(a.sequences.items()))))
    assert crosstalk_score(rev) == crosstalk_score(a)


def test_tsv_output(tmp_path):
    a = assign_sequences(CAT, seed=2)
    p = tmp_path / "seq.tsv"
    a.write(p)
    rows = [line.split("\t") for line in p.read_text().splitlines()]
    assert {r[0] for r in rows} == set(CAT.names())
    assert a.strand(["T2*", "So*"]) == a["T2*"] + a["So*"]

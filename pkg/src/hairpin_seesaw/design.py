"""Sequence assignment for a domain catalog under a three-letter code.

Sense domains are drawn from {A, C, T}; their complements are exact
reverse complements, so G only ever appears on the complementary side of
a duplex.  Partial pairs such as (T1*, T2, 2) are placed deliberately:
the 5' end of the first domain is complementary to the 3' end of the
second over exactly ``n`` bases, which extends the hairpin stem when the
two flank it.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Mapping

import numpy as np

from .domains import DomainCatalog

SENSE_ALPHABET = "ACT"
_COMP = str.maketrans("ACGT", "TGCA")


class DesignError(RuntimeError):
    pass


def revcomp(seq: str) -> str:
    return seq.translate(_COMP)[::-1]


@dataclass(frozen=True)
class DesignConstraints:
    max_homopolymer: int = 4
    # complementary runs longer than this between non-partner domains are rejected
    max_unintended_run: int = 5
    toehold_nt: int = 5
    alphabet: str = SENSE_ALPHABET
    attempts_per_domain: int = 2000
    max_restarts: int = 50


@dataclass(frozen=True)
class SequenceAssignment:
    catalog: DomainCatalog = field(compare=False, repr=False)
    sequences: Mapping[str, str]
    seed: int | None = None

    def __getitem__(self, name: str) -> str:
        return self.sequences[name]

    def strand(self, domain_names) -> str:
        return "".join(self.sequences[d] for d in domain_names)

    def to_tsv(self) -> str:
        return "".join(f"{n}\t{self.sequences[n]}\n" for n in sorted(self.sequences))

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_tsv())


# --------------------------------------------------------------------------
# primitive measures


def longest_homopolymer(seq: str) -> int:
    best = run = 0
    prev = ""
    for ch in seq:
        run = run + 1 if ch == prev else 1
        prev = ch
        best = max(best, run)
    return best


def longest_common_run(a: str, b: str) -> int:
    """Length of the longest common substring."""
    best = 0
    prev = [0] * (len(b) + 1)
    for ca in a:
        cur = [0] * (len(b) + 1)
        for j, cb in enumerate(b, 1):
            if ca == cb:
                cur[j] = prev[j - 1] + 1
                if cur[j] > best:
                    best = cur[j]
        prev = cur
    return best


def complementary_run(a: str, b: str) -> int:
    """Longest stretch of ``a`` that can pair antiparallel with ``b``."""
    return longest_common_run(a, revcomp(b))


def junction_overlap(first: str, second: str) -> int:
    """Bases from the 5' end of ``first`` pairing with the 3' end of ``second``."""
    k = 0
    while (k < min(len(first), len(second))
           and first[k] == revcomp(second[len(second) - k - 1])):
        k += 1
    return k


def _partials(catalog: DomainCatalog):
    seen = set()
    for d in catalog:
        if d.partial_with and (d.partial_with, d.name) not in seen:
            seen.add((d.name, d.partial_with))
    # orient so the complement-side domain comes first
    out = []
    for a, b in seen:
        if not a.endswith("*") and b.endswith("*"):
            a, b = b, a
        out.append((a, b, catalog[a].partial_bases))
    return sorted(out)


# --------------------------------------------------------------------------
# scoring and validation


def _designed(catalog, a, b) -> bool:
    return a == b or catalog[a].complement_of == b


def crosstalk_score(assignment: SequenceAssignment) -> int:
    """Longest unintended complementary run between two distinct domains.

    Every domain (sense and complement) is a candidate single-stranded
    segment; a domain and its own complement are the designed pairing and
    are skipped.
    """
    cat = assignment.catalog
    names = sorted(assignment.sequences)
    best = 0
    for a, b in combinations(names, 2):
        if _designed(cat, a, b):
            continue
        best = max(best, complementary_run(assignment[a], assignment[b]))
    return best


@dataclass
class ValidationReport:
    checks: dict[str, list[str]]  # constraint -> failure messages

    @property
    def ok(self) -> bool:
        return not any(self.checks.values())

    def failures(self) -> list[str]:
        return [f"{k}: {m}" for k, v in self.checks.items() for m in v]

    def summary(self) -> str:
        return "\n".join(f"{k}: {'PASS' if not v else 'FAIL (' + '; '.join(v) + ')'}"
                         for k, v in self.checks.items())


def validate(assignment: SequenceAssignment,
             constraints: DesignConstraints = DesignConstraints()) -> ValidationReport:
    cat = assignment.catalog
    seqs = assignment.sequences
    checks = {k: [] for k in ("alphabet", "lengths", "complements", "g_confinement",
                              "junction_overlap", "homopolymer", "unintended_runs")}
    for d in cat:
        s = seqs.get(d.name)
        if s is None:
            checks["lengths"].append(f"{d.name} unassigned")
            continue
        if set(s) - set("ACGT"):
            checks["alphabet"].append(f"{d.name} has non-nucleotide characters")
        if len(s) != d.length_nt:
            checks["lengths"].append(f"{d.name} is {len(s)} nt, expected {d.length_nt}")
        if d.is_toehold and len(s) != constraints.toehold_nt:
            checks["lengths"].append(f"toehold {d.name} is {len(s)} nt")
        if seqs.get(d.complement_of) is not None and revcomp(seqs[d.complement_of]) != s:
            checks["complements"].append(f"{d.name} is not the reverse complement of "
                                         f"{d.complement_of}")
        if not d.name.endswith("*") and set(s) - set(constraints.alphabet):
            checks["g_confinement"].append(f"sense domain {d.name} uses "
                                           f"{''.join(sorted(set(s) - set(constraints.alphabet)))}")
        if longest_homopolymer(s) > constraints.max_homopolymer:
            checks["homopolymer"].append(f"{d.name} has a run of {longest_homopolymer(s)}")
    for a, b, n in _partials(cat):
        if a in seqs and b in seqs:
            k = junction_overlap(seqs[a], seqs[b])
            if k != n:
                checks["junction_overlap"].append(f"{a}/{b} overlap {k}, expected {n}")
    assigned = sorted(n for n in seqs if n in cat)
    for a, b in combinations(assigned, 2):
        if _designed(cat, a, b):
            continue
        r = complementary_run(seqs[a], seqs[b])
        if r > constraints.max_unintended_run:
            checks["unintended_runs"].append(f"{a}/{b} share a complementary run of {r}")
    return ValidationReport(checks)


# --------------------------------------------------------------------------
# generation


def _order(catalog: DomainCatalog) -> list[str]:
    """Sense domains, toeholds first, partner-constrained domains last."""
    sense = catalog.sense_domains()
    return [d.name for d in sorted(sense, key=lambda d: (not d.is_toehold,
                                                         d.partial_with is not None, d.name))]


def assign_sequences(catalog: DomainCatalog,
                     constraints: DesignConstraints = DesignConstraints(),
                     seed: int = 0) -> SequenceAssignment:
    """Rejection-sample sense sequences satisfying ``constraints``.

    Deterministic for a given seed.  Raises :class:`DesignError` naming the
    constraint that rejected the most candidates when the budget runs out.
    """
    for d in catalog:
        if d.is_toehold and d.length_nt != constraints.toehold_nt:
            raise DesignError(f"toehold {d.name} is {d.length_nt} nt, constraints require "
                              f"{constraints.toehold_nt}")
    rng = np.random.default_rng(seed)
    alphabet = np.array(list(constraints.alphabet))
    partials = _partials(catalog)
    rejected = Counter()
    for _ in range(constraints.max_restarts):
        seqs: dict[str, str] = {}
        ok = True
        for name in _order(catalog):
            d = catalog[name]
            comp = d.complement_of
            for _ in range(constraints.attempts_per_domain):
                cand = "".join(rng.choice(alphabet, d.length_nt))
                cand = _apply_partials(cand, name, comp, seqs, partials)
                reason = _reject(cand, name, comp, seqs, catalog, constraints, partials)
                if reason is None:
                    seqs[name] = cand
                    seqs[comp] = revcomp(cand)
                    break
                rejected[reason] += 1
            else:
                ok = False
                break
        if ok:
            return SequenceAssignment(catalog, dict(sorted(seqs.items())), seed)
    worst = rejected.most_common(1)[0][0] if rejected else "unknown"
    raise DesignError(f"constraints unsatisfiable within budget; tightest: {worst}")


def _apply_partials(cand, name, comp, seqs, partials):
    """Force the designed overlap bases onto the 3' end of ``name``."""
    for a, b, n in partials:
        if b == name and a in seqs and n > 0:
            cand = cand[:-n] + revcomp(seqs[a][:n])
        elif a == comp and b in seqs and n > 0:
            # a = comp(name): its 5' end is revcomp of name's 3' end
            cand = cand[:-n] + seqs[b][-n:]
    return cand


def _reject(cand, name, comp, seqs, catalog, c, partials):
    if longest_homopolymer(cand) > c.max_homopolymer:
        return "homopolymer"
    trial = dict(seqs)
    trial[name] = cand
    trial[comp] = revcomp(cand)
    for a, b, n in partials:
        if a in trial and b in trial and junction_overlap(trial[a], trial[b]) != n:
            return "junction_overlap"
    for new in (name, comp):
        for other, s in trial.items():
            if other == new or _designed(catalog, new, other):
                continue
            if complementary_run(trial[new], s) > c.max_unintended_run:
                return "unintended_runs"
    return None

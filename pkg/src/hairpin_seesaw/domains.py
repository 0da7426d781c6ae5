"""Domain-level representation of strands and multi-strand complexes.

Domains are the unit of hybridization.  A :class:`Strand` is an ordered
list of domains (5' to 3'), and a :class:`Complex` is a connected set of
strands joined by whole-domain pairings.  Species identity is decided by
:func:`canonicalize`, which produces a label independent of the order the
strands were listed in.
"""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping

TOEHOLD = "toehold"
BRANCH = "branch"

DEFAULT_TOEHOLD_NT = 5
DEFAULT_BRANCH_NT = 15
MIN_BRANCH_NT = 10


class DomainError(ValueError):
    """Raised for unknown domains or structurally invalid complexes."""


@dataclass(frozen=True)
class DomainSpec:
    name: str
    length_nt: int
    kind: str = BRANCH
    complement_of: str | None = None
    # partner domain whose sequence overlaps this one by a few bases
    partial_with: str | None = None
    partial_bases: int = 0

    def __post_init__(self):
        if self.length_nt <= 0:
            raise DomainError(f"domain {self.name!r}: length must be positive")
        if self.kind not in (TOEHOLD, BRANCH):
            raise DomainError(f"domain {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == BRANCH and self.length_nt < MIN_BRANCH_NT:
            raise DomainError(
                f"branch domain {self.name!r} must be >= {MIN_BRANCH_NT} nt")

    @property
    def is_toehold(self) -> bool:
        return self.kind == TOEHOLD

    def pairs_with(self, other: "DomainSpec") -> bool:
        return self.complement_of == other.name and other.complement_of == self.name

    def __str__(self):
        return self.name


class DomainCatalog:
    """Name-indexed set of domains closed under complementation."""

    def __init__(self, domains: Iterable[DomainSpec]):
        self._domains: dict[str, DomainSpec] = {}
        for d in domains:
            if d.name in self._domains:
                raise DomainError(f"duplicate domain name {d.name!r}")
            self._domains[d.name] = d
        for d in self._domains.values():
            if d.complement_of is None:
                raise DomainError(f"domain {d.name!r} has no complement")
            c = self._domains.get(d.complement_of)
            if c is None:
                raise DomainError(
                    f"domain {d.name!r}: complement {d.complement_of!r} not in catalog")
            if c.complement_of != d.name:
                raise DomainError(f"complement of {d.name!r} is not an involution")
            if c.length_nt != d.length_nt or c.kind != d.kind:
                raise DomainError(f"{d.name!r} and its complement differ in shape")

    @classmethod
    def from_specs(cls, specs: Iterable[tuple[str, int, str]],
                   partial: Iterable[tuple[str, str, int]] = ()) -> "DomainCatalog":
        """Build a catalog from ``(name, length, kind)`` sense domains.

        Complements are named ``name*``.  ``partial`` lists domain pairs that
        share a few complementary bases, e.g. ``("T1*", "T2", 2)``.
        """
        links: dict[str, tuple[str, int]] = {}
        for a, b, n in partial:
            links[a] = (b, n)
            links[b] = (a, n)
        out = []
        for name, length, kind in specs:
            for nm, comp in ((name, name + "*"), (name + "*", name)):
                pw, pb = links.get(nm, (None, 0))
                out.append(DomainSpec(nm, length, kind, comp, pw, pb))
        return cls(out)

    def __getitem__(self, name: str) -> DomainSpec:
        try:
            return self._domains[name]
        except KeyError:
            raise DomainError(f"unknown domain {name!r}") from None

    def __contains__(self, name) -> bool:
        return name in self._domains

    def __iter__(self):
        return iter(self._domains.values())

    def __len__(self):
        return len(self._domains)

    def names(self) -> list[str]:
        return list(self._domains)

    def complement(self, d: DomainSpec | str) -> DomainSpec:
        name = d if isinstance(d, str) else d.name
        return self[self[name].complement_of]

    def strand(self, name: str, domain_names: Iterable[str]) -> "Strand":
        return Strand(name, tuple(self[n] for n in domain_names))

    def sense_domains(self) -> list[DomainSpec]:
        return [d for d in self._domains.values() if not d.name.endswith("*")]


def load_catalog(path: str | Path) -> DomainCatalog:
    """Read a catalog file of ``key=value`` records, one domain per line.

    Recognised keys: ``name``, ``length_nt``, ``kind``, ``complement_of``,
    ``partial_with``, ``partial_bases``.  Blank lines and ``#`` comments are
    skipped.  A record without ``complement_of`` gets an implicit ``name*``
    complement unless that name is declared elsewhere in the file.
    """
    records = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        rec = {}
        for tok in line.split():
            if "=" not in tok:
                raise DomainError(f"{path}:{lineno}: expected key=value, got {tok!r}")
            k, v = tok.split("=", 1)
            rec[k] = v
        if "name" not in rec or "length_nt" not in rec:
            raise DomainError(f"{path}:{lineno}: name and length_nt are required")
        records.append(rec)

    declared = {r["name"] for r in records}
    domains = []
    for r in records:
        comp = r.get("complement_of")
        kind = r.get("kind", BRANCH)
        length = int(r["length_nt"])
        pw = r.get("partial_with")
        pb = int(r.get("partial_bases", 0))
        if comp is None:
            comp = r["name"] + "*"
            if comp not in declared:
                domains.append(DomainSpec(comp, length, kind, r["name"]))
        domains.append(DomainSpec(r["name"], length, kind, comp, pw, pb))
    return DomainCatalog(domains)


@dataclass(frozen=True)
class Strand:
    name: str
    domains: tuple[DomainSpec, ...]

    def __post_init__(self):
        if not self.domains:
            raise DomainError(f"strand {self.name!r} has no domains")

    def __len__(self):
        return len(self.domains)

    def __str__(self):
        return f"{self.name}[{' '.join(d.name for d in self.domains)}]"


# A pairing joins (strand index, domain index) to (strand index, domain index).
Site = tuple[int, int]
Pair = tuple[Site, Site]


def _norm_pair(a: Site, b: Site) -> Pair:
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class Complex:
    strands: tuple[Strand, ...]
    pairings: frozenset = field(default_factory=frozenset)
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "pairings",
                           frozenset(_norm_pair(a, b) for a, b in self.pairings))
        self.validate()

    @classmethod
    def single(cls, strand: Strand, label: str = "") -> "Complex":
        return cls((strand,), frozenset(), label)

    def validate(self):
        if not self.strands:
            raise DomainError("complex has no strands")
        seen = set()
        for a, b in self.pairings:
            if a == b:
                raise DomainError(f"domain {a} paired with itself")
            for s, d in (a, b):
                if not (0 <= s < len(self.strands) and 0 <= d < len(self.strands[s])):
                    raise DomainError(f"pairing site {(s, d)} out of range")
                if (s, d) in seen:
                    raise DomainError(f"site {(s, d)} paired twice")
                seen.add((s, d))
            da, db = self.domain(a), self.domain(b)
            if not da.pairs_with(db):
                raise DomainError(f"invalid pairing {da.name}<->{db.name}: not complements")
        if not self.is_connected():
            raise DomainError("pairing graph is not connected")

    def domain(self, site: Site) -> DomainSpec:
        return self.strands[site[0]].domains[site[1]]

    def partner_map(self) -> dict[Site, Site]:
        m = {}
        for a, b in self.pairings:
            m[a] = b
            m[b] = a
        return m

    def is_connected(self) -> bool:
        n = len(self.strands)
        parent = list(range(n))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for (sa, _), (sb, _) in self.pairings:
            parent[find(sa)] = find(sb)
        return len({find(i) for i in range(n)}) == 1

    def sites(self):
        for s, strand in enumerate(self.strands):
            for d in range(len(strand)):
                yield (s, d)

    @property
    def key(self) -> str:
        """Canonical serialization; equal for isomorphic complexes."""
        return _canonical_form(self)[0]

    def __str__(self):
        return self.label or self.key


def _serialize(strands, pairings, order) -> str:
    pos = {old: new for new, old in enumerate(order)}
    names = "+".join(strands[i].name for i in order)
    pairs = sorted(
        _norm_pair((pos[a[0]], a[1]), (pos[b[0]], b[1])) for a, b in pairings)
    body = ",".join(f"{a[0]}.{a[1]}:{b[0]}.{b[1]}" for a, b in pairs)
    return f"{names}/{body}"


def _canonical_form(c: Complex) -> tuple[str, tuple[int, ...]]:
    best = None
    for order in itertools.permutations(range(len(c.strands))):
        s = _serialize(c.strands, c.pairings, order)
        if best is None or s < best[0]:
            best = (s, order)
    return best


def canonicalize(c: Complex, names: Mapping[str, str] | None = None) -> Complex:
    """Return ``c`` with strands in canonical order and a deterministic label.

    The label is looked up in ``names`` (canonical key to species name) and
    falls back to the canonical key itself.
    """
    c.validate()
    key, order = _canonical_form(c)
    pos = {old: new for new, old in enumerate(order)}
    strands = tuple(c.strands[i] for i in order)
    pairings = frozenset(
        _norm_pair((pos[a[0]], a[1]), (pos[b[0]], b[1])) for a, b in c.pairings)
    label = (names or {}).get(key, key)
    return Complex(strands, pairings, label)


def strand_census(c: Complex) -> Counter:
    return Counter(s.name for s in c.strands)


def relabel(c: Complex, label: str) -> Complex:
    return replace(c, label=label)

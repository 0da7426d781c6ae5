"""Mass-action reactions and reaction networks, plus the text dump format.

A dump has one reaction per line::

    G + I -> G.I @ 2743000 , 0.002743

Reversible reactions carry a second rate constant after the comma.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .domains import Complex, strand_census


@dataclass(frozen=True)
class Reaction:
    reactants: tuple[str, ...]
    products: tuple[str, ...]
    k_forward: float
    k_backward: float | None = None
    label: str = ""
    kind: str = ""

    def __post_init__(self):
        object.__setattr__(self, "reactants", tuple(sorted(self.reactants)))
        object.__setattr__(self, "products", tuple(sorted(self.products)))
        if self.k_forward < 0 or (self.k_backward is not None and self.k_backward < 0):
            raise ValueError(f"negative rate constant in {self}")

    @property
    def reversible(self) -> bool:
        return self.k_backward is not None

    def identity(self) -> tuple:
        """Orientation-free identity used for set comparisons."""
        fwd = (self.reactants, self.products, self.k_forward, self.k_backward)
        if not self.reversible:
            return fwd
        bwd = (self.products, self.reactants, self.k_backward, self.k_forward)
        return min(fwd, bwd)

    def channels(self):
        """Unidirectional (reactants, products, k) triples."""
        yield self.reactants, self.products, self.k_forward
        if self.reversible:
            yield self.products, self.reactants, self.k_backward

    def species(self) -> set[str]:
        return set(self.reactants) | set(self.products)

    def to_line(self) -> str:
        s = f"{' + '.join(self.reactants)} -> {' + '.join(self.products)} @ {self.k_forward!r}"
        if self.reversible:
            s += f" , {self.k_backward!r}"
        return s

    def __str__(self):
        arrow = "<=>" if self.reversible else "->"
        return f"{' + '.join(self.reactants)} {arrow} {' + '.join(self.products)}"


@dataclass(frozen=True)
class ReactionNetwork:
    species: tuple[str, ...]
    reactions: tuple[Reaction, ...]
    complexes: Mapping[str, Complex] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        known = set(self.species)
        if len(known) != len(self.species):
            raise ValueError("duplicate species names")
        for r in self.reactions:
            missing = r.species() - known
            if missing:
                raise ValueError(f"reaction {r} uses unknown species {sorted(missing)}")

    def __len__(self):
        return len(self.reactions)

    def channels(self) -> list[tuple[tuple[str, ...], tuple[str, ...], float]]:
        return [ch for r in self.reactions for ch in r.channels()]

    def reaction_set(self) -> set[tuple]:
        return {r.identity() for r in self.reactions}

    def census(self, species: str) -> Counter:
        return strand_census(self.complexes[species])

    def unbalanced(self) -> list[Reaction]:
        """Reactions whose strand census differs between the two sides."""
        bad = []
        for r in self.reactions:
            lhs = sum((self.census(s) for s in r.reactants), Counter())
            rhs = sum((self.census(s) for s in r.products), Counter())
            if lhs != rhs:
                bad.append(r)
        return bad

    def strands(self) -> list[str]:
        names = set()
        for s in self.species:
            names |= set(self.census(s))
        return sorted(names)

    def fluorescent_species(self, dye_strand: str = "reporter_bottom",
                            quencher_strand: str = "reporter_top") -> list[str]:
        """Species that carry the dye strand without its quencher partner."""
        out = []
        for s in self.species:
            cen = self.census(s)
            if cen.get(dye_strand, 0) > cen.get(quencher_strand, 0):
                out.append(s)
        return out

    def restrict(self, species: Iterable[str]) -> "ReactionNetwork":
        keep = set(species)
        rxns = tuple(r for r in self.reactions if r.species() <= keep)
        sp = tuple(s for s in self.species if s in keep)
        return ReactionNetwork(sp, rxns, {s: c for s, c in self.complexes.items() if s in keep})

    def renamed(self, mapping: Mapping[str, str]) -> "ReactionNetwork":
        def rn(x):
            return mapping.get(x, x)
        rxns = tuple(
            Reaction(tuple(map(rn, r.reactants)), tuple(map(rn, r.products)),
                     r.k_forward, r.k_backward, r.label, r.kind)
            for r in self.reactions)
        return ReactionNetwork(tuple(map(rn, self.species)), rxns,
                               {rn(s): c for s, c in self.complexes.items()})

    def union(self, other: "ReactionNetwork") -> "ReactionNetwork":
        species = list(self.species) + [s for s in other.species if s not in self.species]
        seen = set()
        rxns = []
        for r in self.reactions + other.reactions:
            if r.identity() not in seen:
                seen.add(r.identity())
                rxns.append(r)
        complexes = dict(self.complexes)
        complexes.update(other.complexes)
        return ReactionNetwork(tuple(species), tuple(rxns), complexes)

    def dump(self) -> str:
        lines = sorted(r.to_line() for r in self.reactions)
        return "\n".join(lines) + ("\n" if lines else "")


def parse_dump(text: str) -> list[Reaction]:
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            lhs, rest = line.split("->")
            rhs, rates = rest.split("@")
            ks = [float(x) for x in rates.split(",")]
        except ValueError:
            raise ValueError(f"line {lineno}: cannot parse {line!r}") from None
        reac = tuple(x.strip() for x in lhs.split("+") if x.strip())
        prod = tuple(x.strip() for x in rhs.split("+") if x.strip())
        out.append(Reaction(reac, prod, ks[0], ks[1] if len(ks) > 1 else None))
    return out

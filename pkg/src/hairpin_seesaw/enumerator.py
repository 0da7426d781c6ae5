"""Rule-based enumeration of strand-displacement reactions.

Bimolecular steps start when an exposed toehold on one complex meets its
complement on another and the adjacent branch domain of the invader
matches the incumbent strand bound next to the target toehold.  After the
initiating step the joint structure is relaxed by fast unimolecular moves
that are not tracked as separate reactions:

* branch migration of an unpaired domain onto an adjacent site held by an
  identical domain (reversible, explored exhaustively),
* zipping of two free complementary domains that extend an existing helix,
* closing of a hairpin stem from two free complementary branch domains on
  one strand, and release of other strands bound inside the new loop,
* dissociation of parts held together by toehold pairings only.

A step is a toehold exchange (reversible) when the substrate exposes a
fresh, unsequestered toehold right after the newly formed helix.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping

from .domains import Complex, canonicalize
from .motifs import MotifParams
from .network import Reaction, ReactionNetwork

QUENCHER_STRANDS = frozenset({"reporter_top"})
MAX_RELAX_STATES = 10_000


class EnumerationError(RuntimeError):
    def __init__(self, message, frontier=()):
        super().__init__(message)
        self.frontier = list(frontier)


@dataclass(frozen=True)
class ExposedToehold:
    complex: Complex
    strand: str
    site: tuple[int, int]
    domain: str
    sequestered_bases: int = 0


# --------------------------------------------------------------------------
# structural helpers on (strands, partner-map) pairs


def _innermost_stem(strands, partner, site):
    """Innermost same-strand pair (a, b) with a < i < b, or None."""
    s, i = site
    best = None
    for a in range(len(strands[s])):
        p = partner.get((s, a))
        if p is None or p[0] != s or p[1] <= a:
            continue
        b = p[1]
        if a < i < b and (best is None or b - a < best[1] - best[0]):
            best = (a, b)
    return best


def _sequestered(strands, partner, site) -> int:
    dom = strands[site[0]].domains[site[1]]
    if not dom.is_toehold or dom.partial_with is None or site in partner:
        return 0
    stem = _innermost_stem(strands, partner, site)
    if stem is None:
        return 0
    s = site[0]
    for k in range(stem[0] + 1, stem[1]):
        if (s, k) not in partner and strands[s].domains[k].name == dom.partial_with:
            return dom.partial_bases
    return 0


def exposed_toeholds(c: Complex) -> list[ExposedToehold]:
    partner = c.partner_map()
    out = []
    for site in c.sites():
        d = c.domain(site)
        if d.is_toehold and site not in partner:
            out.append(ExposedToehold(c, c.strands[site[0]].name, site, d.name,
                                      _sequestered(c.strands, partner, site)))
    return out


def _dom(strands, site):
    return strands[site[0]].domains[site[1]]


def _valid(strands, site):
    s, i = site
    return 0 <= s < len(strands) and 0 <= i < len(strands[s])


def _components(strands, partner, branch_only=True):
    n = len(strands)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b in partner.items():
        if branch_only and _dom(strands, a).is_toehold:
            continue
        parent[find(a[0])] = find(b[0])
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _to_complexes(strands, partner) -> list[Complex]:
    """Split into physically connected molecules, dropping toehold-only links."""
    out = []
    for group in _components(strands, partner, branch_only=True):
        pos = {old: new for new, old in enumerate(group)}
        pairs = set()
        for a, b in partner.items():
            if a[0] in pos and b[0] in pos and a < b:
                pairs.add(((pos[a[0]], a[1]), (pos[b[0]], b[1])))
        out.append(Complex(tuple(strands[i] for i in group), frozenset(pairs)))
    return out


def _state_key(partner) -> frozenset:
    return frozenset((a, b) for a, b in partner.items() if a < b)


def _pair(partner, a, b):
    partner[a] = b
    partner[b] = a


def _unpair(partner, a):
    b = partner.pop(a)
    del partner[b]


# --------------------------------------------------------------------------
# fast moves


def _migrations(strands, partner):
    """Three-way branch-migration steps available in this structure."""
    moves = []
    for z, strand in enumerate(strands):
        for i in range(len(strand)):
            zi = (z, i)
            if zi in partner:
                continue
            for e in (1, -1):
                nb = (z, i + e)
                if not _valid(strands, nb) or nb not in partner:
                    continue
                s, k = partner[nb]
                target = (s, k + e)
                if not _valid(strands, target) or target not in partner:
                    continue
                if not _dom(strands, zi).pairs_with(_dom(strands, target)):
                    continue
                moves.append((zi, target))
    return moves


def _zip_move(strands, partner):
    for z, strand in enumerate(strands):
        for i in range(len(strand)):
            zi = (z, i)
            if zi in partner:
                continue
            for e in (1, -1):
                nb = (z, i + e)
                if not _valid(strands, nb) or nb not in partner:
                    continue
                s, k = partner[nb]
                target = (s, k + e)
                if (_valid(strands, target) and target not in partner and target != zi
                        and _dom(strands, zi).pairs_with(_dom(strands, target))):
                    return zi, target
    return None


def _closure_move(strands, partner):
    for s, strand in enumerate(strands):
        n = len(strand)
        for a in range(n):
            if (s, a) in partner or strand.domains[a].is_toehold:
                continue
            for b in range(a + 2, n):
                if (s, b) not in partner and strand.domains[a].pairs_with(strand.domains[b]):
                    return (s, a), (s, b)
    return None


def _strained(strands, partner):
    """Sites bound to another strand inside a closed hairpin loop."""
    bad = []
    for s, strand in enumerate(strands):
        for a in range(len(strand)):
            p = partner.get((s, a))
            if p is None or p[0] != s or p[1] <= a:
                continue
            inner = [(s, k) for k in range(a + 1, p[1])]
            if any(partner.get(x, (s, None))[0] == s for x in inner if x in partner):
                continue  # not the innermost stem
            bad += [x for x in inner if x in partner and partner[x][0] != s]
    return bad


def _downhill(strands, partner, reclose):
    """Apply one irreversible fast move in place; return True if one applied."""
    mv = _zip_move(strands, partner)
    if mv:
        _pair(partner, *mv)
        return True
    if reclose:
        bad = _strained(strands, partner)
        if bad:
            for x in bad:
                if x in partner:
                    _unpair(partner, x)
            return True
        mv = _closure_move(strands, partner)
        if mv:
            _pair(partner, *mv)
            return True
    return False


def _splits(strands, partner):
    return len(_components(strands, partner, branch_only=True)) > 1


def relax(strands, partner, reclose=True) -> list[list[Complex]]:
    """Resting outcomes of a structure under the fast moves.

    Returns a list of outcomes, each a list of complexes.  Usually there is
    exactly one outcome.
    """
    partner = dict(partner)
    if _splits(strands, partner):
        return _relax_parts(_to_complexes(strands, partner), reclose)
    if _downhill(strands, partner, reclose):
        return relax(strands, partner, reclose)

    # explore the neutral branch-migration graph for exits
    start = _state_key(partner)
    seen = {start: partner}
    queue = deque([partner])
    exits = []
    while queue:
        cur = queue.popleft()
        for zi, target in _migrations(strands, cur):
            nxt = dict(cur)
            _unpair(nxt, target)
            _pair(nxt, zi, target)
            key = _state_key(nxt)
            if key in seen:
                continue
            seen[key] = nxt
            if len(seen) > MAX_RELAX_STATES:
                raise EnumerationError("branch-migration state space too large")
            probe = dict(nxt)
            if _splits(strands, probe) or _downhill(strands, probe, reclose):
                exits.append(nxt)
            else:
                queue.append(nxt)
    if not exits:
        best = min(seen.values(), key=lambda p: sorted(_state_key(p)))
        return [_to_complexes(strands, best)]
    outcomes = []
    for ex in exits:
        for o in relax(strands, ex, reclose):
            if not any(_same(o, p) for p in outcomes):
                outcomes.append(o)
    return outcomes


def _relax_parts(parts, reclose):
    outcomes = [[]]
    for c in parts:
        sub = relax(c.strands, c.partner_map(), reclose)
        outcomes = [o + s for o in outcomes for s in sub]
    return outcomes


def _same(a, b):
    return sorted(x.key for x in a) == sorted(x.key for x in b)


def _in_loop(strands, partner, site) -> bool:
    return _innermost_stem(strands, partner, site) is not None


# --------------------------------------------------------------------------
# bimolecular enumeration


@dataclass(frozen=True)
class _Step:
    reactants: tuple[Complex, ...]
    products: tuple[Complex, ...]
    kind: str          # exchange | displacement | anneal
    hindered: bool = False
    reporting: bool = False


def _merge(a: Complex, b: Complex):
    strands = a.strands + b.strands
    off = len(a.strands)
    partner = a.partner_map()
    for x, y in b.partner_map().items():
        partner[(x[0] + off, x[1])] = (y[0] + off, y[1])
    return strands, partner, off


def _displacements(inv: Complex, sub: Complex, reclose, max_exchange_strands):
    strands, partner, off = _merge(inv, sub)
    for tsite in sub.sites():
        s, j = tsite[0] + off, tsite[1]
        tdom = strands[s].domains[j]
        if not tdom.is_toehold or (s, j) in partner:
            continue
        seq_sub = _sequestered(strands, partner, (s, j))
        for delta in (1, -1):
            m = (s, j + delta)
            if not _valid(strands, m) or m not in partner or _dom(strands, m).is_toehold:
                continue
            inc = partner[m]
            if inc[0] < off:
                continue
            for v in range(off):
                for p in range(len(strands[v])):
                    vp, vq = (v, p), (v, p - delta)
                    if vp in partner or not _dom(strands, vp).is_toehold:
                        continue
                    if not _dom(strands, vp).pairs_with(tdom):
                        continue
                    if not _valid(strands, vq) or vq in partner:
                        continue
                    if _dom(strands, vq).name != _dom(strands, inc).name:
                        continue
                    seq_inv = _sequestered(strands, partner, vp)
                    new = dict(partner)
                    _unpair(new, m)
                    _pair(new, vp, (s, j))
                    _pair(new, vq, m)
                    if _in_loop(strands, new, (s, j)) or _in_loop(strands, new, vp):
                        continue  # a closed loop cannot host the new helix
                    reporting = strands[inc[0]].name in QUENCHER_STRANDS
                    for outcome in relax(strands, new, reclose):
                        kind = _classify(strands, outcome, s, j, delta, v)
                        if kind == "exchange" and len(sub.strands) > max_exchange_strands:
                            continue
                        yield _Step((inv, sub), tuple(outcome), kind,
                                    max(seq_sub, seq_inv) > 0, reporting)


def _classify(strands, outcome, s, j, delta, v) -> str:
    """Exchange if the substrate exposes a fresh toehold past the new helix."""
    target = strands[s]
    holder = None
    for c in outcome:
        if any(x is target for x in c.strands):
            # identify the substrate strand inside its product complex
            idx = [k for k, x in enumerate(c.strands) if x is target]
            holder = (c, idx)
            break
    c, idx = holder
    inv_strand = strands[v]
    pm = c.partner_map()
    for si in idx:
        site = (si, j)
        if site not in pm or c.strands[pm[site][0]] is not inv_strand:
            continue
        k = j
        while (si, k) in pm and c.strands[pm[(si, k)][0]] is inv_strand:
            k += delta
        nxt = (si, k)
        if not _valid(c.strands, nxt):
            return "displacement"
        d = c.domain(nxt)
        if d.is_toehold and nxt not in pm and _sequestered(c.strands, pm, nxt) == 0:
            return "exchange"
        return "displacement"
    return "displacement"


def _annealing(a: Complex, b: Complex):
    if a.pairings or b.pairings or len(a.strands) != 1 or len(b.strands) != 1:
        return
    strands, partner, off = _merge(a, b)
    for p in range(len(strands[0])):
        for q in range(len(strands[1])):
            da, db = strands[0].domains[p], strands[1].domains[q]
            if da.is_toehold or not da.pairs_with(db):
                continue
            new = dict(partner)
            _pair(new, (0, p), (1, q))
            for outcome in relax(strands, new, True):
                yield _Step((a, b), tuple(outcome), "anneal")


def _steps(a: Complex, b: Complex, reclose=True, max_exchange_strands=2):
    seen = set()
    gens = [_displacements(a, b, reclose, max_exchange_strands),
            _displacements(b, a, reclose, max_exchange_strands),
            _annealing(a, b)]
    for gen in gens:
        for st in gen:
            key = (tuple(sorted(c.key for c in st.reactants)),
                   tuple(sorted(c.key for c in st.products)), st.kind, st.hindered)
            if key in seen or key[0] == key[1]:
                continue
            seen.add(key)
            yield st


def _label(c: Complex, names: Mapping[str, str]) -> str:
    return names.get(c.key, c.key)


def _to_reaction(st: _Step, p: MotifParams, names) -> Reaction | None:
    reac = tuple(_label(c, names) for c in st.reactants)
    prod = tuple(_label(c, names) for c in st.products)
    if st.hindered:
        if p.k_leak <= 0:
            return None
        return Reaction(reac, prod, p.k_leak, None, "", "leak")
    kf = p.k_rep if st.reporting else p.k_t
    kb = None
    if st.kind == "exchange":
        kb = p.k_unopen_eff if len(prod) == 1 else p.k_t
    return Reaction(reac, prod, kf, kb, "", st.kind)


def enumerate_bimolecular(a: Complex, b: Complex, params: MotifParams | None = None,
                          names: Mapping[str, str] | None = None,
                          max_exchange_strands: int = 2) -> list[Reaction]:
    """Reactions between one copy of ``a`` and one copy of ``b``.

    Steps initiated from a partly sequestered toehold are leak channels and
    get the rate ``k_leak``; they are omitted when ``k_leak`` is zero.
    """
    p = params or MotifParams()
    names = names or {}
    out = []
    for st in _steps(a, b, p.collapse_reclosure, max_exchange_strands):
        r = _to_reaction(st, p, names)
        if r is not None:
            out.append(r)
    return out


def reclosure_products(c: Complex) -> list[Complex] | None:
    """Products of closing an opened hairpin, or None if nothing closes."""
    strands, partner = c.strands, c.partner_map()
    if _closure_move(strands, partner) is None:
        return None
    outcomes = relax(strands, partner, reclose=True)
    if len(outcomes) != 1:
        raise EnumerationError(f"ambiguous reclosure of {c}")
    return outcomes[0]


def enumerate_network(seeds: Iterable[Complex], max_species: int = 100,
                      params: MotifParams | None = None,
                      names: Mapping[str, str] | None = None,
                      max_exchange_strands: int = 2) -> ReactionNetwork:
    """Close ``seeds`` under bimolecular (and reclosure) reactions.

    With ``collapse_reclosure`` off, opened hairpins get an explicit
    first-order reclosure channel and are treated as too short-lived to
    take part in bimolecular steps.

    The result is independent of seed order: species and reactions are
    sorted before the network is built.
    """
    p = params or MotifParams()
    names = dict(names or {})
    found: dict[str, Complex] = {}
    for c in sorted(seeds, key=lambda x: x.key):
        found.setdefault(c.key, canonicalize(c, names))
    if len(found) > max_species:
        raise EnumerationError(
            f"{len(found)} seed species exceed max_species={max_species}",
            [c.label for c in found.values()])

    reactions: dict[tuple, Reaction] = {}
    done_pairs: set[tuple[str, str]] = set()
    done_single: set[str] = set()
    transient: set[str] = set()  # open hairpins waiting to reclose

    def add(rx, products):
        for c in products:
            if c.key not in found:
                if len(found) >= max_species:
                    raise EnumerationError(
                        f"max_species={max_species} exceeded while adding {_label(c, names)}",
                        [x.label for x in found.values()])
                found[c.key] = canonicalize(c, names)
        if rx is not None:
            reactions.setdefault(rx.identity(), rx)

    changed = True
    while changed:
        changed = False
        keys = sorted(found)
        for ka in keys:
            if not p.collapse_reclosure and ka not in done_single:
                done_single.add(ka)
                prods = reclosure_products(found[ka])
                if prods is not None:
                    transient.add(ka)
                    rx = Reaction((_label(found[ka], names),),
                                  tuple(_label(c, names) for c in prods),
                                  p.k_close, None, "", "reclose")
                    add(rx, prods)
                    changed = True
        keys = sorted(k for k in found if k not in transient)
        for i, ka in enumerate(keys):
            for kb in keys[i:]:
                if (ka, kb) in done_pairs:
                    continue
                done_pairs.add((ka, kb))
                for st in _steps(found[ka], found[kb], p.collapse_reclosure,
                                 max_exchange_strands):
                    rx = _to_reaction(st, p, names)
                    if rx is None:
                        continue
                    add(rx, st.products)
                    changed = True

    complexes = {}
    for c in found.values():
        lab = _label(c, names)
        complexes[lab] = c
    species = tuple(sorted(complexes))
    rxns = tuple(sorted(reactions.values(), key=lambda r: r.to_line()))
    return ReactionNetwork(species, rxns, complexes)


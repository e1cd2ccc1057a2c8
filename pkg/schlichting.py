"""
Finite levels of the Schlichting completion
Permutation images of Lambda on metric balls, their orders, the inverse-limit
restriction maps and core probing
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from coset_space import BallTable, CosetId
from errors import ConsistencyError, CosetOutOfRangeError, InvalidInputError
from group_core import (
    BaumslagSolitarFamily,
    GroupElement,
    LamplighterFamily,
    PairPresentation,
    SpecialLinearFamily,
    multiply,
)

logger = logging.getLogger(__name__)

Perm = List[int]


# ============ PERMUTATIONS ============

def mult_perm(p: Perm, q: Perm) -> Perm:
    """Apply p, then q"""
    return [q[i] for i in p]


def inv_perm(p: Perm) -> Perm:
    inv = [0] * len(p)
    for i, j in enumerate(p):
        inv[j] = i
    return inv


def is_id_perm(p: Perm) -> bool:
    return all(i == j for i, j in enumerate(p))


def fmt_cycles(p: Perm, labels: Optional[Sequence[int]] = None) -> str:
    """Disjoint-cycle notation, '()' for the identity"""
    labels = labels if labels is not None else range(len(p))
    seen = set()
    out = []
    for i in range(len(p)):
        if i in seen or p[i] == i:
            continue
        cycle = [i]
        seen.add(i)
        j = p[i]
        while j != i:
            seen.add(j)
            cycle.append(j)
            j = p[j]
        out.append('(' + ' '.join(str(labels[k]) for k in cycle) + ')')
    return ''.join(out) if out else '()'


class StabilizerChain:
    """
    Deterministic Schreier-Sims: base points are the first moved points,
    Schreier trees are built by BFS in generator order.
    """

    def __init__(self, degree: int):
        self.degree = degree
        self.gens: List[Tuple[Perm, Perm]] = []
        self.basepoint: Optional[int] = None
        self.tree: Dict[int, Optional[Tuple[int, int]]] = {}
        self.tree_gens: List[Tuple[Perm, Perm]] = []
        self.stab: Optional[StabilizerChain] = None

    def generators(self) -> List[Tuple[Perm, Perm]]:
        if self.stab is None:
            return self.gens
        return self.stab.generators() + self.gens

    def order(self) -> int:
        if self.basepoint is None:
            return 1
        return len(self.tree) * self.stab.order()

    def add_gen(self, gen: Perm) -> None:
        gen = self.sift(gen)
        if not is_id_perm(gen):
            self.add_nonmember_gen(gen)

    def sift(self, p: Perm) -> Perm:
        """Strip p through the chain; the identity iff p is a member"""
        if self.basepoint is None:
            return p
        a = p[self.basepoint]
        if a not in self.tree:
            return p
        return self.stab.sift(self.move_to_basepoint(a, p))

    def move_to_basepoint(self, a: int, p: Optional[Perm] = None) -> Perm:
        """Apply the tree word carrying a to the base point after p"""
        if p is None:
            p = list(range(self.degree))
        while a != self.basepoint:
            edge_i, edge_pol = self.tree[a]
            edge_gen = self.tree_gens[edge_i][edge_pol]
            a = edge_gen[a]
            p = mult_perm(p, edge_gen)
        return p

    def add_nonmember_gen(self, gen: Perm) -> None:
        if self.basepoint is None:
            self.basepoint = next(i for i, j in enumerate(gen) if i != j)
            self.stab = StabilizerChain(self.degree)

        if gen[self.basepoint] == self.basepoint:
            self.stab.add_nonmember_gen(gen)
        else:
            self.gens.append((gen, inv_perm(gen)))

        self.rebuild_schreier_tree()
        self.add_all_schreier_gens()

    def add_all_schreier_gens(self) -> None:
        for gen, inv_gen in self.generators():
            for a in sorted(self.tree):
                p = inv_perm(self.move_to_basepoint(a, inv_gen))
                self.stab.add_gen(self.move_to_basepoint(p[self.basepoint], p))

    def rebuild_schreier_tree(self) -> None:
        self.tree_gens = list(self.generators())
        self.tree = {self.basepoint: None}
        queue = [self.basepoint]
        while queue:
            a = queue.pop(0)
            for i, pair in enumerate(self.tree_gens):
                for pol, gen in enumerate(pair):
                    b = gen[a]
                    if b not in self.tree:
                        self.tree[b] = (i, 1 - pol)
                        queue.append(b)


# ============ FINITE LEVELS ============

@dataclass(eq=False)
class FiniteLevelCompletion:
    """K_R: the image of Lambda in the symmetric group of B(Lambda, R)"""
    level: int
    carrier: Tuple[CosetId, ...]
    generator_names: Tuple[str, ...]
    permutations: Tuple[Tuple[int, ...], ...]
    depths: Tuple[int, ...]
    _order: Optional[int] = field(default=None, repr=False)

    def position(self) -> Dict[CosetId, int]:
        return {cid: i for i, cid in enumerate(self.carrier)}

    def preserves_spheres(self) -> bool:
        """Each generator maps every sphere of the carrier onto itself"""
        return all(self.depths[perm[i]] == self.depths[i] for perm in self.permutations for i in range(len(perm)))


def level_action(table: BallTable, level: int) -> FiniteLevelCompletion:
    """
    Permutations of B(Lambda, level) induced by left multiplication by each Lambda-generator

    Raises:
        CosetOutOfRangeError: level exceeds the table or an image is missing
        ConsistencyError: a generator moves a coset to another sphere
    """
    if level > table.radius:
        raise CosetOutOfRangeError(f"level {level} needs a table of radius {level}", needed_radius=level)
    carrier = tuple(table.ball(level))
    position = {cid: i for i, cid in enumerate(carrier)}
    perms = []
    for gen in table.pres.lambda_generators:
        perm = []
        for cid in carrier:
            target = table.find(multiply(gen.element, table.reps[cid]))
            if target is None or target not in position:
                raise CosetOutOfRangeError(
                    f"image of coset {cid} under {gen.label} is outside the table", needed_radius=level)
            perm.append(position[target])
        perms.append(tuple(perm))
    flc = FiniteLevelCompletion(
        level=level,
        carrier=carrier,
        generator_names=tuple(g.label for g in table.pres.lambda_generators),
        permutations=tuple(perms),
        depths=tuple(table.depths[cid] for cid in carrier),
    )
    if not flc.preserves_spheres():
        raise ConsistencyError(f"a subgroup generator moves cosets between spheres at level {level}")
    return flc


def level_order(flc: FiniteLevelCompletion) -> int:
    """|K_R| by Schreier-Sims over the carrier in id order"""
    if flc._order is None:
        chain = StabilizerChain(len(flc.carrier))
        for perm in flc.permutations:
            chain.add_gen(list(perm))
        flc._order = chain.order()
        logger.info(f"✅ Level {flc.level}: |K| = {flc._order} on {len(flc.carrier)} cosets")
    return flc._order


def restriction_check(flc_hi: FiniteLevelCompletion, flc_lo: FiniteLevelCompletion) -> bool:
    """True iff restricting the higher level's permutations gives the lower level's"""
    if flc_lo.level > flc_hi.level:
        raise InvalidInputError(f"level {flc_lo.level} is above level {flc_hi.level}")
    hi_pos = flc_hi.position()
    if any(cid not in hi_pos for cid in flc_lo.carrier) or flc_hi.generator_names != flc_lo.generator_names:
        raise InvalidInputError("carriers of the two levels do not match")
    for perm_hi, perm_lo in zip(flc_hi.permutations, flc_lo.permutations):
        for i, cid in enumerate(flc_lo.carrier):
            image = flc_hi.carrier[perm_hi[hi_pos[cid]]]
            if image != flc_lo.carrier[perm_lo[i]]:
                return False
    return True


# ============ CORE ============

@dataclass(frozen=True)
class CoreProbe:
    """Least level at which an element moves a coset, None if trivial up to max_level"""
    element: str
    level: Optional[int]
    max_level: int

    @property
    def trivial(self) -> bool:
        return self.level is None


@dataclass(frozen=True)
class CorePolicyReport:
    probes: Tuple[CoreProbe, ...]

    def to_json(self) -> str:
        items = [{'element': p.element, 'level': p.level, 'trivial_up_to': p.max_level if p.trivial else None}
                 for p in self.probes]
        return json.dumps({'probes': items}, indent=2, ensure_ascii=False)


def core_probe(table: BallTable, elements: Sequence[GroupElement], max_level: int,
               labels: Optional[Sequence[str]] = None) -> CorePolicyReport:
    """
    For each element of Lambda, the least level at which it acts nontrivially

    Raises:
        InvalidInputError: An element is not in Lambda
    """
    if max_level > table.radius:
        raise CosetOutOfRangeError(f"probing to level {max_level} needs radius {max_level}", needed_radius=max_level)
    pres = table.pres
    probes = []
    for i, g in enumerate(elements):
        label = labels[i] if labels else str(g)
        if not pres.in_lambda(g):
            logger.error(f"❌ Core probe rejected {label}: not in the subgroup")
            raise InvalidInputError(f"{label} is not an element of the subgroup")
        level = None
        for cid in table.ball(max_level):
            if table.find(multiply(g, table.reps[cid])) != cid:
                d = table.depths[cid]
                level = d if level is None else min(level, d)
        probes.append(CoreProbe(element=label, level=level, max_level=max_level))
    return CorePolicyReport(tuple(probes))


# ============ REPORTS ============

def level_report(flc: FiniteLevelCompletion) -> Dict:
    """JSON-ready report with generator permutations as cycles over CosetIds"""
    return {
        'level': flc.level,
        'carrier_size': len(flc.carrier),
        'generator_cycles': [
            {'generator': name, 'cycles': fmt_cycles(list(perm), flc.carrier)}
            for name, perm in zip(flc.generator_names, flc.permutations)
        ],
        'order': level_order(flc),
    }


def known_completion(pres: PairPresentation) -> Optional[str]:
    """Name of the completion for recognised parameter patterns"""
    family = pres.family
    if isinstance(family, SpecialLinearFamily) and len(family.primes) == 1:
        return f"PSL({family.size},Q_{family.primes[0]})"
    if isinstance(family, BaumslagSolitarFamily) and family.m == family.n == 1:
        # normal subgroup: the completion is the quotient itself
        return "Γ/Λ"
    if isinstance(family, LamplighterFamily):
        # K is the full product over N; the translates of N meet in the empty set, so the core is trivial
        q = family.order
        return f"(∏_N Z/{q} ⊕ ⊕_(Z∖N) Z/{q}) ⋊ Z"
    return None

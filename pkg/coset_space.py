"""
Coset space X = Gamma/Lambda
Ball tables by Schreier BFS, Lambda-orbits, indices, the quotient metric,
double cosets, bounded-geometry verdicts and growth profiles
"""

from __future__ import annotations

import csv
import io
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Hashable, List, Optional, Tuple

from errors import BudgetExceededError, ConsistencyError, CosetOutOfRangeError, InvalidInputError
from group_core import GroupElement, PairPresentation, invert, multiply

logger = logging.getLogger(__name__)

CosetId = int


# ============ BALL TABLE ============

@dataclass(eq=False)
class BallTable:
    """
    Finite piece of the coset space.

    layers hold the Schreier BFS layer (min word length over the coset), None
    for cosets added by orbit closure. depths hold the quotient-metric distance
    to the base coset once the table is closed.
    """
    pres: PairPresentation
    radius: int
    reps: List[GroupElement] = field(default_factory=list)
    keys: List[Optional[Hashable]] = field(default_factory=list)
    words: List[Tuple[int, ...]] = field(default_factory=list)
    layers: List[Optional[int]] = field(default_factory=list)
    depths: List[int] = field(default_factory=list)
    orbit_ids: List[int] = field(default_factory=list)
    orbits: List[Tuple[CosetId, ...]] = field(default_factory=list)
    edges: Dict[Tuple[CosetId, int], CosetId] = field(default_factory=dict)
    closed: bool = False
    _index: Dict[Hashable, CosetId] = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.reps)

    def find(self, g: GroupElement) -> Optional[CosetId]:
        """CosetId of g.Lambda, or None if the coset is not in the table"""
        key = self.pres.coset_key(g)
        if key is not None:
            return self._index.get(key)
        # membership-oracle dedup
        for cid, rep in enumerate(self.reps):
            if self.pres.same_coset(rep, g):
                return cid
        return None

    def add(self, g: GroupElement, word: Tuple[int, ...], layer: Optional[int]) -> CosetId:
        cid = len(self.reps)
        key = self.pres.coset_key(g)
        self.reps.append(g)
        self.keys.append(key)
        self.words.append(word)
        self.layers.append(layer)
        if key is not None:
            self._index[key] = cid
        return cid

    def ball(self, r: int) -> List[CosetId]:
        """CosetIds of the metric ball B(Lambda, r) in id order"""
        self._require_closed('metric balls')
        if r > self.radius:
            raise CosetOutOfRangeError(f"ball of radius {r} needs a larger table", needed_radius=r)
        return [cid for cid, d in enumerate(self.depths) if d <= r]

    def layer_ball(self, r: int) -> List[CosetId]:
        return [cid for cid, layer in enumerate(self.layers) if layer is not None and layer <= r]

    def orbit_of(self, cid: CosetId) -> Tuple[CosetId, ...]:
        self._require_closed('orbit lookups')
        return self.orbits[self.orbit_ids[cid]]

    def sort_key(self, cid: CosetId) -> tuple:
        """Tie-break order: layer first, then canonical key (or id in oracle mode)"""
        layer = self.layers[cid]
        layer = layer if layer is not None else float('inf')
        key = self.keys[cid]
        return (layer, key) if key is not None else (layer, cid)

    def _require_closed(self, what: str) -> None:
        if not self.closed:
            raise InvalidInputError(f"{what} need a closed ball table (use metric_ball)")


def expand_ball(pres: PairPresentation, radius: int) -> BallTable:
    """
    Schreier BFS of the cosets at layer <= radius

    Args:
        pres: The pair presentation
        radius: Largest BFS layer to enumerate

    Returns:
        A BallTable with edges for every coset at layer < radius

    Raises:
        BudgetExceededError: More than max_ball cosets; carries the partial table
    """
    if radius < 0:
        raise InvalidInputError(f"radius must be nonnegative, got {radius}")
    if radius > pres.max_radius:
        raise InvalidInputError(f"radius {radius} exceeds max_radius {pres.max_radius}")

    table = BallTable(pres=pres, radius=radius)
    table.add(pres.identity, (), 0)
    frontier = [0]
    gens = pres.gamma_generators

    for layer in range(radius):
        next_frontier = []
        for cid in frontier:
            rep, word = table.reps[cid], table.words[cid]
            for gi, gen in enumerate(gens):
                g = multiply(gen.element, rep)
                target = table.find(g)
                if target is None:
                    target = table.add(g, (gi,) + word, layer + 1)
                    next_frontier.append(target)
                table.edges[(cid, gi)] = target
            if len(table) > pres.max_ball:
                logger.warning(f"⚠️ Ball budget {pres.max_ball} exceeded at layer {layer + 1}")
                raise BudgetExceededError(
                    f"ball of radius {radius} exceeds {pres.max_ball} cosets",
                    completed_radius=layer,
                    partial=table,
                )
        frontier = next_frontier

    logger.info(f"✅ Expanded {len(table)} cosets up to layer {radius}")
    return table


def close_ball(table: BallTable, budget: Optional[int] = None) -> BallTable:
    """
    Add the full Lambda-orbit of every coset in the table and assign depths

    After closing, the table holds exactly the metric ball B(Lambda, radius).

    Raises:
        BudgetExceededError: An orbit exceeded the budget (max_orbit by default)
    """
    if table.closed:
        return table
    pres = table.pres
    budget = pres.max_orbit if budget is None else budget
    lambda_gens = pres.lambda_generators
    orbit_ids: Dict[CosetId, int] = {}
    orbits: List[Tuple[CosetId, ...]] = []

    seeds = list(range(len(table)))
    for seed in seeds:
        # seeds come in layer order, so every layer below this one is closed
        completed = table.layers[seed] - 1
        if seed in orbit_ids:
            continue
        members = [seed]
        orbit_ids[seed] = len(orbits)
        queue = deque([seed])
        while queue:
            cid = queue.popleft()
            rep, word = table.reps[cid], table.words[cid]
            for gen in lambda_gens:
                g = multiply(gen.element, rep)
                target = table.find(g)
                if target is None:
                    target = table.add(g, gen.word + word, None)
                if target in orbit_ids:
                    continue
                orbit_ids[target] = len(orbits)
                members.append(target)
                queue.append(target)
            if len(members) > budget:
                logger.warning(f"⚠️ Orbit of coset {seed} exceeds {budget} cosets")
                raise BudgetExceededError(
                    f"orbit of coset {seed} exceeds {budget} cosets",
                    completed_radius=completed,
                    partial=table,
                )
        orbits.append(tuple(sorted(members)))
        if len(table) > pres.max_ball:
            raise BudgetExceededError(
                f"closed ball exceeds {pres.max_ball} cosets", completed_radius=completed, partial=table)

    table.orbits = orbits
    table.orbit_ids = [orbit_ids[cid] for cid in range(len(table))]
    depth_of_orbit = []
    for members in orbits:
        known = [table.layers[c] for c in members if table.layers[c] is not None]
        depth_of_orbit.append(min(known))
    table.depths = [depth_of_orbit[o] for o in table.orbit_ids]
    table.closed = True
    logger.info(f"✅ Closed ball of radius {table.radius}: {len(table)} cosets in {len(orbits)} orbits")
    return table


def metric_ball(pres: PairPresentation, radius: int) -> BallTable:
    """The metric ball B(Lambda, radius) as a closed table"""
    return close_ball(expand_ball(pres, radius))


# ============ ORBITS AND INDICES ============

def _orbit_elements(pres: PairPresentation, g: GroupElement, budget: int) -> Optional[List[GroupElement]]:
    """Representatives of the Lambda-orbit of g.Lambda, or None past the budget"""
    reps = [g]
    seen = {pres.coset_key(g)} if pres.use_coset_keys else None
    queue = deque([g])
    lambda_gens = pres.lambda_generators_for(g)
    while queue:
        x = queue.popleft()
        for gen in lambda_gens:
            y = multiply(gen.element, x)
            if seen is not None:
                key = pres.coset_key(y)
                if key in seen:
                    continue
                seen.add(key)
            elif any(pres.same_coset(r, y) for r in reps):
                continue
            reps.append(y)
            if len(reps) > budget:
                return None
            queue.append(y)
    return reps


def lambda_orbit(table: BallTable, c: CosetId, budget: Optional[int] = None) -> Optional[List[CosetId]]:
    """
    The Lambda-orbit of a coset as sorted CosetIds

    Returns None when the orbit has more than budget cosets.

    Raises:
        CosetOutOfRangeError: Orbit members lie outside an unclosed table
    """
    budget = table.pres.max_orbit if budget is None else budget
    if table.closed:
        members = table.orbit_of(c)
        return list(members) if len(members) <= budget else None
    elements = _orbit_elements(table.pres, table.reps[c], budget)
    if elements is None:
        return None
    ids = []
    for g in elements:
        cid = table.find(g)
        if cid is None:
            raise CosetOutOfRangeError(
                f"orbit of coset {c} leaves the table; close it first",
                needed_radius=table.radius,
            )
        ids.append(cid)
    return sorted(ids)


def index(pres: PairPresentation, gamma: GroupElement, budget: Optional[int] = None) -> Optional[int]:
    """
    [Lambda : Lambda ∩ gamma Lambda gamma^-1] by BFS over left cosets of the intersection

    Two elements l1, l2 of Lambda share a coset iff gamma^-1 l1^-1 l2 gamma lies in Lambda.
    The subgroup generators are widened when gamma needs a larger window (lamplighter shifts).
    """
    budget = pres.max_orbit if budget is None else budget
    gamma_inv = invert(gamma)
    # store l.gamma so that each test is one product and one membership check
    shifted = [gamma]
    queue = deque([pres.identity])
    lambda_gens = pres.lambda_generators_for(gamma)
    while queue:
        lam = queue.popleft()
        for gen in lambda_gens:
            new = multiply(gen.element, lam)
            new_shifted = multiply(new, gamma)
            new_inv = multiply(gamma_inv, invert(new))
            if any(pres.in_lambda(multiply(new_inv, s)) for s in shifted):
                continue
            shifted.append(new_shifted)
            if len(shifted) > budget:
                return None
            queue.append(new)
    return len(shifted)


# ============ DISTANCES ============

def coset_distance(table: BallTable, c1: CosetId, c2: CosetId) -> int:
    """
    Quotient-metric distance d(s.Lambda, t.Lambda) = min |l s^-1 t l'|

    Computed as the depth of the coset s^-1 t.Lambda in a closed table.
    """
    if c1 == c2:
        return 0
    table._require_closed('coset distances')
    g = multiply(invert(table.reps[c1]), table.reps[c2])
    cid = table.find(g)
    if cid is None:
        # the closed table holds every coset of depth <= radius, so d exceeds it
        needed = table.radius + 1
        raise CosetOutOfRangeError(
            f"distance between cosets {c1} and {c2} exceeds {table.radius}",
            needed_radius=needed,
        )
    return table.depths[cid]


def schreier_distance(table: BallTable, c1: CosetId, c2: CosetId) -> Optional[int]:
    """Graph distance along recorded Schreier edges, None if not connected in the table"""
    if c1 == c2:
        return 0
    adjacency: Dict[CosetId, List[CosetId]] = {}
    for (src, _), dst in table.edges.items():
        adjacency.setdefault(src, []).append(dst)
        adjacency.setdefault(dst, []).append(src)
    dist = {c1: 0}
    queue = deque([c1])
    while queue:
        cid = queue.popleft()
        for nxt in adjacency.get(cid, ()):
            if nxt not in dist:
                dist[nxt] = dist[cid] + 1
                if nxt == c2:
                    return dist[nxt]
                queue.append(nxt)
    return None


# ============ DOUBLE COSETS ============

@dataclass(frozen=True)
class DoubleCoset:
    """Lambda.rep.Lambda as the left cosets it contains"""
    index: int
    orbit: int
    rep: GroupElement
    rep_id: CosetId
    word: Tuple[int, ...]
    members: Tuple[CosetId, ...]
    depth: int

    @property
    def degree(self) -> int:
        return len(self.members)


def double_cosets_up_to(table: BallTable, radius: int) -> List[DoubleCoset]:
    """Partition of B(Lambda, radius) into Lambda-orbits, ordered by depth then representative"""
    cids = table.ball(radius)
    seen = set()
    found = []
    for cid in cids:
        orbit = table.orbit_ids[cid]
        if orbit in seen:
            continue
        seen.add(orbit)
        members = table.orbits[orbit]
        depths = {table.depths[m] for m in members}
        if len(depths) != 1 or any(m >= len(table) for m in members):
            raise ConsistencyError(f"orbit {orbit} is not contained in one sphere")
        rep_id = min(members, key=table.sort_key)
        if table.layers[rep_id] != table.depths[rep_id]:
            raise ConsistencyError(f"orbit {orbit} has no member at its own depth")
        found.append((table.depths[rep_id], table.sort_key(rep_id), rep_id, orbit, members))

    found.sort(key=lambda item: (item[0], item[1]))
    return [
        DoubleCoset(
            index=i,
            orbit=orbit,
            rep=table.reps[rep_id],
            rep_id=rep_id,
            word=table.words[rep_id],
            members=members,
            depth=depth,
        )
        for i, (depth, _, rep_id, orbit, members) in enumerate(found)
    ]


# ============ VERDICTS ============

@dataclass(frozen=True)
class OrbitScan:
    """Orbits met by the layer ball: (seed coset, size) for finished ones, seeds that ran out of budget"""
    radius: int
    budget: int
    orbits: Tuple[Tuple[CosetId, int], ...]
    escaped: Tuple[CosetId, ...]

    @property
    def complete(self) -> bool:
        return not self.escaped


def enumerate_orbits(table: BallTable, radius: int, budget: Optional[int] = None) -> OrbitScan:
    """Enumerate the Lambda-orbit of every coset at layer <= radius"""
    pres = table.pres
    budget = pres.max_orbit if budget is None else budget
    covered = set()
    orbits = []
    escaped = []
    for cid in table.layer_ball(radius):
        if cid in covered:
            continue
        elements = _orbit_elements(pres, table.reps[cid], budget)
        if elements is None:
            logger.warning(f"⚠️ Orbit of coset {cid} exceeds {budget} cosets")
            escaped.append(cid)
            covered.add(cid)
            continue
        for g in elements:
            member = table.find(g)
            if member is not None:
                covered.add(member)
        orbits.append((cid, len(elements)))
    return OrbitScan(radius=radius, budget=budget, orbits=tuple(orbits), escaped=tuple(escaped))


@dataclass(frozen=True)
class HeckeVerdict:
    """Finite-scale bounded-geometry verdict: 'confirmed' up to radius, or 'unknown'"""
    kind: str
    radius: int
    budget: int
    coset: Optional[CosetId] = None

    @property
    def confirmed(self) -> bool:
        return self.kind == 'confirmed'

    def __str__(self) -> str:
        if self.confirmed:
            return f"ConfirmedUpTo({self.radius})"
        return f"Unknown({self.budget})"


def is_hecke_at(pres: PairPresentation, radius: int, budget: Optional[int] = None) -> HeckeVerdict:
    """Confirm that every Lambda-orbit meeting the ball of the given radius is finite"""
    budget = pres.max_orbit if budget is None else budget
    try:
        table = expand_ball(pres, radius)
    except BudgetExceededError:
        return HeckeVerdict('unknown', radius, budget)
    scan = enumerate_orbits(table, radius, budget)
    if scan.complete:
        logger.info(f"✅ All {len(scan.orbits)} orbits up to radius {radius} are finite")
        return HeckeVerdict('confirmed', radius, budget)
    return HeckeVerdict('unknown', radius, budget, coset=scan.escaped[0])


# ============ GROWTH ============

@dataclass(frozen=True)
class GrowthPoint:
    radius: int
    ball: int
    orbits: int
    max_orbit: int


@dataclass(frozen=True)
class GrowthProfile:
    points: Tuple[GrowthPoint, ...]

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator='\n')
        writer.writerow(['radius', 'ball', 'orbits', 'max_orbit'])
        for p in self.points:
            writer.writerow([p.radius, p.ball, p.orbits, p.max_orbit])
        return out.getvalue()


def growth_of_table(table: BallTable, radius: Optional[int] = None) -> GrowthProfile:
    """Ball sizes and orbit statistics of a closed table for r = 0..radius"""
    radius = table.radius if radius is None else radius
    points = []
    for r in range(radius + 1):
        orbits = {table.orbit_ids[c] for c in table.ball(r)}
        sizes = [len(table.orbits[o]) for o in orbits]
        points.append(GrowthPoint(r, sum(sizes), len(sizes), max(sizes)))
    return GrowthProfile(tuple(points))


def growth(pres: PairPresentation, radius: int) -> GrowthProfile:
    """
    Growth profile of the metric balls B(Lambda, r), r = 0..radius

    Raises:
        BudgetExceededError: partial carries the profile up to the last radius that fit
    """
    try:
        return growth_of_table(metric_ball(pres, radius))
    except BudgetExceededError as e:
        completed = min(e.completed_radius, radius - 1)
        partial = None
        for r in range(completed, -1, -1):
            try:
                partial = growth_of_table(metric_ball(pres, r))
                completed = r
                break
            except BudgetExceededError:
                continue
        raise BudgetExceededError(str(e), completed_radius=completed if partial else -1, partial=partial)


# ============ EXPORT ============

def to_dot(table: BallTable) -> str:
    """Schreier graph in DOT: one node per coset labeled by layer, one edge per generator"""
    names = table.pres.generator_names()
    lines = ['digraph schreier {']
    for cid in range(len(table)):
        layer = table.layers[cid]
        label = f"{cid}: {layer}" if layer is not None else f"{cid}: >{table.radius}"
        lines.append(f'  c{cid} [label="{label}"];')
    for (src, gi), dst in sorted(table.edges.items()):
        lines.append(f'  c{src} -> c{dst} [label="{names[gi]}"];')
    lines.append('}')
    return '\n'.join(lines) + '\n'

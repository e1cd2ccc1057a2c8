"""
Hecke algebra of a pair
Exact convolution of double cosets with integer structure constants
"""

from __future__ import annotations

import csv
import io
import logging
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Mapping, Optional, Tuple

from coset_space import BallTable, CosetId, DoubleCoset, double_cosets_up_to
from errors import CosetOutOfRangeError, InvalidInputError
from group_core import GroupElement, invert, multiply

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HeckeElement:
    """Finitely supported integer combination of double cosets (by index)"""
    terms: Tuple[Tuple[int, int], ...]
    radius: int

    @classmethod
    def from_dict(cls, coeffs: Mapping[int, int], radius: int) -> 'HeckeElement':
        return cls(tuple(sorted((d, c) for d, c in coeffs.items() if c)), radius)

    def as_dict(self) -> Dict[int, int]:
        return dict(self.terms)

    def coefficient(self, d: int) -> int:
        return self.as_dict().get(d, 0)

    def __add__(self, other: 'HeckeElement') -> 'HeckeElement':
        coeffs = defaultdict(int, self.as_dict())
        for d, c in other.terms:
            coeffs[d] += c
        return HeckeElement.from_dict(coeffs, min(self.radius, other.radius))

    def scale(self, k: int) -> 'HeckeElement':
        return HeckeElement.from_dict({d: k * c for d, c in self.terms}, self.radius)


class HeckeAlgebra:
    """Convolution algebra on the double cosets of a closed ball table"""

    def __init__(self, table: BallTable):
        self.table = table
        self.double_cosets: List[DoubleCoset] = double_cosets_up_to(table, table.radius)
        self._by_orbit = {dc.orbit: dc for dc in self.double_cosets}
        self._products: Dict[Tuple[int, int], HeckeElement] = {}

    def __len__(self) -> int:
        return len(self.double_cosets)

    def by_element(self, g: GroupElement) -> DoubleCoset:
        """The double coset containing g"""
        cid = self.table.find(g)
        if cid is None:
            raise CosetOutOfRangeError(f"{g} lies outside the ball of radius {self.table.radius}")
        return self._by_orbit[self.table.orbit_ids[cid]]

    def unit(self) -> HeckeElement:
        return HeckeElement(((self.double_cosets[0].index, 1),), self.table.radius)

    def basis(self, a: DoubleCoset) -> HeckeElement:
        return HeckeElement(((a.index, 1),), self.table.radius)

    def degree(self, a: DoubleCoset) -> int:
        return a.degree

    def involution(self, a: DoubleCoset) -> DoubleCoset:
        """Lambda rep^-1 Lambda"""
        return self.by_element(invert(a.rep))

    def convolve(
        self,
        a: DoubleCoset,
        b: DoubleCoset,
        reps: Optional[Mapping[CosetId, GroupElement]] = None,
    ) -> HeckeElement:
        """
        T_a * T_b as a combination of double cosets

        c_ab^d counts the cosets x_i.Lambda of a with x_i^-1 z_d.Lambda inside b,
        for a fixed coset z_d.Lambda of d. Every double coset of the table is
        scanned; the product is complete only if sum c_ab^d deg(d) = deg(a) deg(b).

        Args:
            a: Left factor
            b: Right factor
            reps: Optional representatives overriding the table's, by CosetId

        Raises:
            CosetOutOfRangeError: Some coset of a.b lies outside the table
        """
        if reps is None and (a.index, b.index) in self._products:
            return self._products[(a.index, b.index)]

        table = self.table
        rep = (lambda cid: reps.get(cid, table.reps[cid])) if reps else (lambda cid: table.reps[cid])
        x_inv = [invert(rep(cid)) for cid in a.members]
        coeffs: Dict[int, int] = {}
        covered = 0
        for d in self.double_cosets:
            z = rep(d.rep_id)
            count = 0
            for xi in x_inv:
                cid = table.find(multiply(xi, z))
                if cid is not None and table.orbit_ids[cid] == b.orbit:
                    count += 1
            if count:
                coeffs[d.index] = count
                covered += count * d.degree

        if covered != a.degree * b.degree:
            logger.info(f"⚠️ T_{a.index} * T_{b.index}: {covered} of {a.degree * b.degree} cosets in the table")
            raise CosetOutOfRangeError(
                f"T_{a.index} * T_{b.index} leaves the ball of radius {table.radius}",
                needed_radius=table.radius + 1,
            )

        result = HeckeElement.from_dict(coeffs, table.radius)
        if reps is None:
            self._products[(a.index, b.index)] = result
        return result

    def multiply(self, x: HeckeElement, y: HeckeElement) -> HeckeElement:
        """Bilinear extension of convolve"""
        coeffs: Dict[int, int] = defaultdict(int)
        for i, ci in x.terms:
            for j, cj in y.terms:
                for d, c in self.convolve(self.double_cosets[i], self.double_cosets[j]).terms:
                    coeffs[d] += ci * cj * c
        return HeckeElement.from_dict(coeffs, self.table.radius)

    def structure_table(self) -> List[Tuple[int, int, int, int]]:
        """Rows (a, b, d, c_ab^d) for every pair whose product fits the table"""
        rows = []
        for a in self.double_cosets:
            for b in self.double_cosets:
                try:
                    product = self.convolve(a, b)
                except CosetOutOfRangeError:
                    continue
                for d, c in product.terms:
                    rows.append((a.index, b.index, d, c))
        logger.info(f"✅ Structure table with {len(rows)} nonzero constants")
        return rows

    def structure_table_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator='\n')
        writer.writerow(['a', 'b', 'd', 'coeff'])
        writer.writerows(self.structure_table())
        return out.getvalue()


@lru_cache(maxsize=8)
def get_hecke_algebra(table: BallTable) -> HeckeAlgebra:
    """Get or create the algebra of a table"""
    if not table.closed:
        raise InvalidInputError("the Hecke algebra needs a closed ball table")
    return HeckeAlgebra(table)


def convolve(a: DoubleCoset, b: DoubleCoset, table: BallTable) -> HeckeElement:
    return get_hecke_algebra(table).convolve(a, b)


def degree(a: DoubleCoset) -> int:
    return a.degree


def involution(a: DoubleCoset, table: BallTable) -> DoubleCoset:
    return get_hecke_algebra(table).involution(a)

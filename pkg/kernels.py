"""
Kernels on the coset space
Positive-type and conditionally-negative-type certificates, Schoenberg
embeddings and the transfer between kernels and bi-invariant functions
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from coset_space import BallTable, CosetId, coset_distance, double_cosets_up_to
from errors import CosetOutOfRangeError, InvalidInputError, NotConditionallyNegativeError
from group_core import format_word, invert, multiply, parse_word

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9


# ============ TYPES ============

@dataclass(frozen=True, eq=False)
class KernelMatrix:
    """Symmetric kernel on an ordered list of cosets"""
    points: Tuple[CosetId, ...]
    values: np.ndarray
    tol: float = DEFAULT_TOL
    kind: Optional[str] = None

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]], points: Optional[Sequence[CosetId]] = None,
                  tol: float = DEFAULT_TOL, kind: Optional[str] = None) -> 'KernelMatrix':
        values = np.array(rows, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise InvalidInputError(f"kernel must be a square matrix, got shape {values.shape}")
        points = tuple(points) if points is not None else tuple(range(values.shape[0]))
        if len(points) != values.shape[0]:
            raise InvalidInputError(f"{len(points)} points for a {values.shape[0]}x{values.shape[0]} kernel")
        return cls(points, values, tol, kind)

    def __len__(self) -> int:
        return len(self.points)

    def entry(self, x: CosetId, y: CosetId) -> float:
        pos = {p: i for i, p in enumerate(self.points)}
        return float(self.values[pos[x], pos[y]])


@dataclass(frozen=True)
class Verdict:
    """yes, or no with a witness vector and its exact quadratic value"""
    ok: bool
    kind: str
    witness: Optional[Tuple[float, ...]] = None
    value: Optional[float] = None

    def to_dict(self) -> Dict:
        return {'kind': self.kind, 'ok': self.ok,
                'witness': list(self.witness) if self.witness is not None else None,
                'value': self.value}


@dataclass
class BiinvariantFunction:
    """Function on double cosets, keyed by the table's orbit ids; missing orbits are 0"""
    values: Dict[int, float] = field(default_factory=dict)
    radius: int = 0

    def support(self, tol: float = 0.0) -> List[int]:
        return sorted(o for o, v in self.values.items() if abs(v) > tol)

    def to_json(self, table: BallTable) -> str:
        items = []
        for dc in double_cosets_up_to(table, table.radius):
            if dc.orbit in self.values:
                items.append({'rep': format_word(table.pres, dc.word), 'value': self.values[dc.orbit]})
        return json.dumps({'radius': self.radius, 'values': items}, indent=2)

    @classmethod
    def from_json(cls, text: str, table: BallTable) -> 'BiinvariantFunction':
        try:
            data = json.loads(text)
            radius = int(data['radius'])
            items = data['values']
        except (ValueError, KeyError, TypeError) as e:
            raise InvalidInputError(f"malformed bi-invariant function: {e}") from e
        values = {}
        for item in items:
            g = parse_word(table.pres, item['rep'])
            cid = table.find(g)
            if cid is None:
                raise CosetOutOfRangeError(f"double coset of {item['rep']!r} is outside the table")
            values[table.orbit_ids[cid]] = float(item['value'])
        return cls(values, radius)


@dataclass(frozen=True)
class Violation:
    """Two pairs of cosets in the same double-coset class with different kernel values"""
    orbit: int
    first: Tuple[CosetId, CosetId]
    second: Tuple[CosetId, CosetId]
    values: Tuple[float, float]


# ============ CERTIFICATES ============

def _check_symmetric(k: KernelMatrix) -> None:
    if not np.array_equal(k.values, k.values.T):
        raise InvalidInputError("kernel matrix is not symmetric")


def _exact_form(values: np.ndarray, v: Sequence[Fraction]) -> Fraction:
    """v^T K v in exact rational arithmetic over the float entries"""
    n = len(v)
    total = Fraction(0)
    for i in range(n):
        if not v[i]:
            continue
        row = Fraction(0)
        for j in range(n):
            if v[j]:
                row += Fraction(float(values[i, j])) * v[j]
        total += v[i] * row
    return total


def _rational_candidates(vector: np.ndarray, sum_zero: bool) -> List[List[Fraction]]:
    """Witness candidates: small rationals first, then the exact float vector"""
    scale = float(np.max(np.abs(vector))) or 1.0
    scaled = vector / scale
    candidates = []
    for limit in (12, 10 ** 6, None):
        if limit is None:
            v = [Fraction(float(x)) for x in scaled]
        else:
            v = [Fraction(float(x)).limit_denominator(limit) for x in scaled]
        if sum_zero:
            last = int(np.argmax(np.abs(scaled)))
            v[last] -= sum(v)
        candidates.append(v)
    return candidates


def _confirm_witness(k: KernelMatrix, vector: np.ndarray, sign: int, sum_zero: bool) -> Optional[Tuple[List[Fraction], Fraction]]:
    """First candidate with sign * v^T K v > tol * |v|^2, exactly"""
    tol = Fraction(k.tol)
    for v in _rational_candidates(vector, sum_zero):
        if not any(v):
            continue
        value = _exact_form(k.values, v)
        if sign * value > tol * sum(x * x for x in v):
            return v, value
    return None


def is_positive_type(k: KernelMatrix, tol: Optional[float] = None) -> Verdict:
    """yes iff the smallest eigenvalue is at least -tol"""
    _check_symmetric(k)
    tol = k.tol if tol is None else tol
    k = KernelMatrix(k.points, k.values, tol, k.kind)
    if len(k) == 0:
        return Verdict(True, 'positive')
    eigvals, eigvecs = np.linalg.eigh(k.values)
    if eigvals[0] >= -tol:
        return Verdict(True, 'positive')
    confirmed = _confirm_witness(k, eigvecs[:, 0], sign=-1, sum_zero=False)
    if confirmed is None:
        logger.warning(f"⚠️ Eigenvalue {eigvals[0]:.3g} not confirmed exactly; treating as roundoff")
        return Verdict(True, 'positive')
    v, value = confirmed
    return Verdict(False, 'positive', tuple(float(x) for x in v), float(value))


def _sum_zero_basis(n: int) -> np.ndarray:
    """Orthonormal basis (columns) of the hyperplane sum(v) = 0"""
    seed = np.eye(n)
    seed[:, 0] = 1.0
    q, _ = np.linalg.qr(seed)
    return q[:, 1:]


def is_cnd(k: KernelMatrix, tol: Optional[float] = None) -> Verdict:
    """yes iff v^T K v <= tol |v|^2 for every v with sum(v) = 0"""
    _check_symmetric(k)
    tol = k.tol if tol is None else tol
    k = KernelMatrix(k.points, k.values, tol, k.kind)
    if np.any(np.abs(np.diag(k.values)) > tol):
        raise InvalidInputError("conditionally negative kernels need a zero diagonal")
    n = len(k)
    if n < 2:
        return Verdict(True, 'cnd')
    basis = _sum_zero_basis(n)
    projected = basis.T @ k.values @ basis
    projected = (projected + projected.T) / 2
    eigvals, eigvecs = np.linalg.eigh(projected)
    if eigvals[-1] <= tol:
        return Verdict(True, 'cnd')
    confirmed = _confirm_witness(k, basis @ eigvecs[:, -1], sign=1, sum_zero=True)
    if confirmed is None:
        logger.warning(f"⚠️ Eigenvalue {eigvals[-1]:.3g} not confirmed exactly; treating as roundoff")
        return Verdict(True, 'cnd')
    v, value = confirmed
    return Verdict(False, 'cnd', tuple(float(x) for x in v), float(value))


def schoenberg_embed(k: KernelMatrix, base: int = 0, tol: Optional[float] = None) -> np.ndarray:
    """
    Points f(x) with |f(x) - f(y)|^2 = k(x, y)

    Args:
        k: A conditionally negative kernel
        base: Position of the point sent to the origin
        tol: Eigenvalue tolerance (defaults to the kernel's)

    Returns:
        Array of shape (len(k), dim), one row per point

    Raises:
        NotConditionallyNegativeError: k fails is_cnd; carries the witness
    """
    tol = k.tol if tol is None else tol
    verdict = is_cnd(k, tol)
    if not verdict.ok:
        logger.error(f"❌ Schoenberg embedding rejected: witness value {verdict.value}")
        raise NotConditionallyNegativeError("kernel is not conditionally negative", verdict.witness)
    n = len(k)
    if n == 0:
        return np.zeros((0, 1))
    K = k.values
    gram = 0.5 * (K[:, [base]] + K[[base], :] - K)
    eigvals, eigvecs = np.linalg.eigh((gram + gram.T) / 2)
    keep = eigvals > tol
    if not np.any(keep):
        return np.zeros((n, 1))
    return eigvecs[:, keep] * np.sqrt(eigvals[keep])


# ============ TRANSFER ============

def _ball_radius(table: BallTable, points: Sequence[CosetId]) -> int:
    if not points:
        raise InvalidInputError("kernel has no points")
    radius = max(table.depths[p] for p in points)
    if sorted(points) != table.ball(radius):
        raise InvalidInputError("kernel points do not form a metric ball of the table")
    return radius


def _pair_orbit(table: BallTable, x: CosetId, y: CosetId) -> int:
    """Orbit id of rep(x)^-1 rep(y).Lambda, i.e. the double coset of the pair"""
    cid = table.find(multiply(invert(table.reps[x]), table.reps[y]))
    if cid is None:
        raise CosetOutOfRangeError(
            f"pair ({x}, {y}) lies at distance above {table.radius}", needed_radius=table.radius + 1)
    return table.orbit_ids[cid]


def kernel_to_biinvariant(k: KernelMatrix, table: BallTable,
                          tol: Optional[float] = None) -> Union[BiinvariantFunction, Violation]:
    """psi(Lambda g Lambda) = k(x, y) over all pairs with rep(x)^-1 rep(y) in the double coset"""
    tol = k.tol if tol is None else tol
    radius = _ball_radius(table, k.points)
    values: Dict[int, float] = {}
    witness: Dict[int, Tuple[CosetId, CosetId]] = {}
    for i, x in enumerate(k.points):
        for j, y in enumerate(k.points):
            orbit = _pair_orbit(table, x, y)
            value = float(k.values[i, j])
            if orbit not in values:
                values[orbit] = value
                witness[orbit] = (x, y)
            elif abs(values[orbit] - value) > tol:
                logger.info(f"⚠️ Kernel is not invariant on double coset orbit {orbit}")
                return Violation(orbit, witness[orbit], (x, y), (values[orbit], value))
    return BiinvariantFunction(values, radius)


def biinvariant_to_kernel(psi: BiinvariantFunction, table: BallTable,
                          radius: Optional[int] = None, tol: float = DEFAULT_TOL) -> KernelMatrix:
    """k(s.Lambda, t.Lambda) = psi(Lambda s^-1 t Lambda) on the ball of the given radius"""
    radius = psi.radius if radius is None else radius
    points = table.ball(radius)
    n = len(points)
    values = np.zeros((n, n))
    for i, x in enumerate(points):
        for j, y in enumerate(points):
            values[i, j] = psi.values.get(_pair_orbit(table, x, y), 0.0)
    return KernelMatrix(tuple(points), values, tol)


def distance_kernel(table: BallTable, points: Optional[Sequence[CosetId]] = None,
                    tol: float = DEFAULT_TOL) -> KernelMatrix:
    """k = d on the given cosets (the whole table by default)"""
    points = tuple(points) if points is not None else tuple(range(len(table)))
    n = len(points)
    values = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            values[i, j] = values[j, i] = coset_distance(table, points[i], points[j])
    return KernelMatrix(points, values, tol, 'cnd')


def propagation(k: KernelMatrix, table: BallTable) -> int:
    """Largest distance between two points carrying a nonzero entry"""
    best = 0
    for i, x in enumerate(k.points):
        for j in range(i, len(k.points)):
            if abs(k.values[i, j]) > k.tol or abs(k.values[j, i]) > k.tol:
                best = max(best, coset_distance(table, x, k.points[j]))
    return best


def properness_profile(k: KernelMatrix, table: BallTable) -> List[Tuple[int, float]]:
    """(r, min k(x, y) over pairs with d(x, y) >= r); evidence of properness, never a verdict"""
    by_distance: Dict[int, float] = {}
    for i, x in enumerate(k.points):
        for j in range(i + 1, len(k.points)):
            d = coset_distance(table, x, k.points[j])
            value = float(k.values[i, j])
            by_distance[d] = min(by_distance.get(d, value), value)
    profile = []
    running = None
    for d in sorted(by_distance, reverse=True):
        running = by_distance[d] if running is None else min(running, by_distance[d])
        profile.append((d, running))
    return sorted(profile)


# ============ FILES ============

def _sidecar(path: Path) -> Path:
    return path.with_suffix('.json')


def kernel_to_csv(k: KernelMatrix, path: Union[str, Path]) -> None:
    """Matrix as CSV plus a JSON sidecar with points, normalization and tolerance"""
    path = Path(path)
    np.savetxt(path, k.values, delimiter=',', fmt='%.17g')
    sidecar = {'points': list(k.points), 'normalized': k.kind, 'tol': k.tol}
    _sidecar(path).write_text(json.dumps(sidecar, indent=2) + '\n', encoding='utf-8')


def kernel_from_csv(path: Union[str, Path], tol: Optional[float] = None) -> KernelMatrix:
    """Read a CSV kernel; the sidecar is optional"""
    path = Path(path)
    try:
        values = np.loadtxt(path, delimiter=',', ndmin=2)
    except (OSError, ValueError) as e:
        raise InvalidInputError(f"cannot read kernel {path}: {e}") from e
    points, kind, file_tol = None, None, DEFAULT_TOL
    sidecar = _sidecar(path)
    if sidecar.exists():
        meta = json.loads(sidecar.read_text(encoding='utf-8'))
        points = meta.get('points')
        kind = meta.get('normalized')
        file_tol = float(meta.get('tol', DEFAULT_TOL))
    return KernelMatrix.from_rows(values, points, tol if tol is not None else file_tol, kind)

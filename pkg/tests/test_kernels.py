from __future__ import annotations

import random

import numpy as np
import pytest

from coset_space import double_cosets_up_to, metric_ball
from errors import InvalidInputError, NotConditionallyNegativeError
from kernels import (
    BiinvariantFunction,
    KernelMatrix,
    Violation,
    biinvariant_to_kernel,
    distance_kernel,
    is_cnd,
    is_positive_type,
    kernel_from_csv,
    kernel_to_biinvariant,
    kernel_to_csv,
    properness_profile,
    propagation,
    schoenberg_embed,
)


def test_positive_type_verdicts() -> None:
    bad = is_positive_type(KernelMatrix.from_rows([[1, 2], [2, 1]]))
    assert not bad.ok
    assert bad.witness in {(1.0, -1.0), (-1.0, 1.0)}
    assert bad.value == -2.0
    assert is_positive_type(KernelMatrix.from_rows([[2, 1], [1, 2]])).ok
    assert is_positive_type(KernelMatrix.from_rows([[1, 1], [1, 1]])).ok


def test_cnd_verdicts() -> None:
    bad = is_cnd(KernelMatrix.from_rows([[0, -1], [-1, 0]]))
    assert not bad.ok
    assert bad.witness in {(1.0, -1.0), (-1.0, 1.0)}
    assert bad.value == 2.0
    assert sum(bad.witness) == 0
    assert is_cnd(KernelMatrix.from_rows([[0, 1], [1, 0]])).ok
    path = KernelMatrix.from_rows([[abs(i - j) for j in range(4)] for i in range(4)])
    assert is_cnd(path).ok
    assert bad.to_dict() == {'kind': 'cnd', 'ok': False, 'witness': list(bad.witness), 'value': 2.0}


def test_malformed_kernels_are_rejected() -> None:
    with pytest.raises(InvalidInputError):
        is_cnd(KernelMatrix.from_rows([[1, 1], [1, 0]]))
    with pytest.raises(InvalidInputError):
        is_positive_type(KernelMatrix.from_rows([[0, 1], [2, 0]]))
    with pytest.raises(InvalidInputError):
        KernelMatrix.from_rows([[0, 1, 2], [1, 0, 1]])


def test_coset_distance_is_conditionally_negative(sl2_ball, bs11_ball) -> None:
    for table, radius in ((sl2_ball, 2), (bs11_ball, 3)):
        k = distance_kernel(table, table.ball(radius))
        assert is_cnd(k).ok


def test_gaussian_of_a_tree_metric_is_positive(sl2_ball) -> None:
    d = distance_kernel(sl2_ball, sl2_ball.ball(2))
    k = KernelMatrix(d.points, np.exp(-0.5 * d.values))
    assert is_positive_type(k).ok


def test_schoenberg_embedding_reproduces_the_kernel(sl2_ball) -> None:
    k = distance_kernel(sl2_ball, sl2_ball.ball(2))
    for base in (0, 5):
        f = schoenberg_embed(k, base=base)
        assert f.shape[0] == len(k)
        assert np.allclose(f[base], 0.0, atol=1e-8)
        diff = f[:, None, :] - f[None, :, :]
        assert np.allclose((diff ** 2).sum(axis=-1), k.values, atol=1e-8)


def test_schoenberg_rejects_non_cnd_kernels() -> None:
    with pytest.raises(NotConditionallyNegativeError) as info:
        schoenberg_embed(KernelMatrix.from_rows([[0, -1], [-1, 0]]))
    assert info.value.witness in {(1.0, -1.0), (-1.0, 1.0)}


def test_transfer_round_trip(sl2_ball) -> None:
    k = distance_kernel(sl2_ball, sl2_ball.ball(2))
    psi = kernel_to_biinvariant(k, sl2_ball)
    far = next(p for p in k.points if sl2_ball.depths[p] == 2)
    assert k.entry(0, far) == 2.0
    assert isinstance(psi, BiinvariantFunction)
    assert psi.radius == 2
    for orbit, value in psi.values.items():
        assert value == sl2_ball.depths[sl2_ball.orbits[orbit][0]]
    back = biinvariant_to_kernel(psi, sl2_ball)
    assert back.points == k.points
    assert np.array_equal(back.values, k.values)


def test_cnd_verdict_ignores_the_bfs_order(sl2_pres, sl2_ball) -> None:
    order = list(reversed(range(len(sl2_pres.gamma_generators))))
    reordered = metric_ball(sl2_pres.with_generator_order(order), 4)
    assert reordered.reps != sl2_ball.reps[:len(reordered)]
    k = distance_kernel(sl2_ball, sl2_ball.ball(2))
    flipped = KernelMatrix(k.points, -k.values)
    for source, expected in ((k, True), (flipped, False)):
        psi = kernel_to_biinvariant(source, sl2_ball)
        moved = BiinvariantFunction.from_json(psi.to_json(sl2_ball), reordered)
        here = biinvariant_to_kernel(psi, sl2_ball)
        there = biinvariant_to_kernel(moved, reordered)
        assert len(here) == len(there)
        assert is_cnd(here).ok is is_cnd(there).ok is expected
        assert np.allclose(np.sort(np.linalg.eigvalsh(here.values)), np.sort(np.linalg.eigvalsh(there.values)))


def test_biinvariant_function_json(sl2_ball) -> None:
    psi = kernel_to_biinvariant(distance_kernel(sl2_ball, sl2_ball.ball(1)), sl2_ball)
    loaded = BiinvariantFunction.from_json(psi.to_json(sl2_ball), sl2_ball)
    assert loaded.values == psi.values
    assert loaded.radius == psi.radius
    assert psi.support() == sorted(o for o, v in psi.values.items() if v)
    with pytest.raises(InvalidInputError):
        BiinvariantFunction.from_json('{"values": []}', sl2_ball)


def test_non_invariant_kernel_reports_a_violation(sl2_ball) -> None:
    k = distance_kernel(sl2_ball, sl2_ball.ball(1))
    values = k.values.copy()
    original = values[1, 2]
    values[1, 2] = values[2, 1] = 5.0
    result = kernel_to_biinvariant(KernelMatrix(k.points, values), sl2_ball)
    assert isinstance(result, Violation)
    assert set(result.values) == {original, 5.0}


def test_kernel_points_must_form_a_ball(sl2_ball) -> None:
    k = distance_kernel(sl2_ball, sl2_ball.ball(2)[:10])
    with pytest.raises(InvalidInputError):
        kernel_to_biinvariant(k, sl2_ball)


def test_propagation_and_properness(sl2_ball, bs11_ball) -> None:
    k = distance_kernel(sl2_ball, sl2_ball.ball(2))
    assert propagation(k, sl2_ball) == 4
    diagonal = KernelMatrix(k.points, np.eye(len(k)))
    assert propagation(diagonal, sl2_ball) == 0
    line = distance_kernel(bs11_ball, bs11_ball.ball(3))
    assert properness_profile(line, bs11_ball) == [(r, float(r)) for r in range(1, 7)]


def test_csv_round_trip(tmp_path, bs11_ball) -> None:
    k = distance_kernel(bs11_ball, bs11_ball.ball(2))
    path = tmp_path / "kernel.csv"
    kernel_to_csv(k, path)
    loaded = kernel_from_csv(path)
    assert loaded.points == k.points
    assert loaded.kind == 'cnd'
    assert loaded.tol == k.tol
    assert np.array_equal(loaded.values, k.values)
    plain = tmp_path / "plain.csv"
    plain.write_text("0,1\n1,0\n", encoding="utf-8")
    assert kernel_from_csv(plain).points == (0, 1)
    with pytest.raises(InvalidInputError):
        kernel_from_csv(tmp_path / "missing.csv")


@pytest.mark.parametrize("fixture, radius", [("sl2_ball", 2), ("bs23_ball", 1), ("lamp_ball", 1)])
def test_propagation_matches_support_depth(request, fixture: str, radius: int) -> None:
    table = request.getfixturevalue(fixture)
    rng = random.Random(31)
    orbits = [dc.orbit for dc in double_cosets_up_to(table, radius)]
    for _ in range(20):
        support = rng.sample(orbits, rng.randint(1, len(orbits)))
        psi = BiinvariantFunction({o: float(rng.randint(1, 9)) for o in support}, radius)
        k = biinvariant_to_kernel(psi, table)
        expected = max(table.depths[table.orbits[o][0]] for o in support)
        assert propagation(k, table) == expected

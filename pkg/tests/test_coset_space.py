from __future__ import annotations

import itertools

import numpy as np
import pytest

from coset_space import (
    close_ball,
    coset_distance,
    double_cosets_up_to,
    enumerate_orbits,
    expand_ball,
    growth,
    index,
    is_hecke_at,
    lambda_orbit,
    metric_ball,
    schreier_distance,
    to_dot,
)
from errors import BudgetExceededError, CosetOutOfRangeError, InvalidInputError
from group_core import (
    BaumslagSolitarFamily,
    LamplighterFamily,
    SpecialLinearFamily,
    build_presentation,
    multiply,
    parse_word,
)


def _distance_matrix(table, points) -> np.ndarray:
    n = len(points)
    d = np.zeros((n, n), dtype=int)
    for i, j in itertools.combinations(range(n), 2):
        d[i, j] = coset_distance(table, points[i], points[j])
        d[j, i] = coset_distance(table, points[j], points[i])
    return d


def test_expand_ball_sizes(bs11_pres, sl2_pres, free_pres) -> None:
    assert len(expand_ball(bs11_pres, 3)) == 7
    table = expand_ball(sl2_pres, 1)
    # brute force: words of length <= 1, deduplicated by the membership oracle
    reps = []
    for g in [sl2_pres.identity] + [gen.element for gen in sl2_pres.gamma_generators]:
        if not any(sl2_pres.same_coset(r, g) for r in reps):
            reps.append(g)
    assert len(table) == len(reps) == 3
    assert len(expand_ball(free_pres, 2)) == 1 + 2 + 6


def test_layers_are_word_lengths(sl2_pres) -> None:
    table = expand_ball(sl2_pres, 3)
    assert table.layers[0] == 0
    assert table.layers == sorted(table.layers)
    for cid in range(len(table)):
        assert len(table.words[cid]) == table.layers[cid]
        assert schreier_distance(table, 0, cid) == table.layers[cid]


def test_stored_cosets_are_distinct(bs23_ball) -> None:
    pres = bs23_ball.pres
    reps = bs23_ball.reps[:60]
    for g, h in itertools.combinations(reps, 2):
        assert not pres.same_coset(g, h)


def test_oracle_dedup_matches_coset_keys() -> None:
    keyed = build_presentation(SpecialLinearFamily([2]))
    oracle = build_presentation(SpecialLinearFamily([2]), use_coset_keys=False)
    a, b = metric_ball(keyed, 2), metric_ball(oracle, 2)
    assert len(a) == len(b) == 31
    assert a.layers == b.layers
    assert a.depths == b.depths
    assert all(keyed.same_coset(g, h) for g, h in zip(a.reps, b.reps))


def test_budget_and_radius_limits() -> None:
    pres = build_presentation(SpecialLinearFamily([2]), max_ball=20)
    with pytest.raises(BudgetExceededError) as info:
        expand_ball(pres, 6)
    assert info.value.completed_radius >= 1
    assert info.value.partial is not None
    with pytest.raises(InvalidInputError):
        expand_ball(build_presentation(SpecialLinearFamily([2]), max_radius=2), 3)


def test_lambda_orbit_examples(bs11_ball, sl2_ball, sl2_pres, free_layer_ball) -> None:
    for cid in range(len(bs11_ball)):
        assert lambda_orbit(bs11_ball, cid) == [cid]
    d = sl2_ball.find(parse_word(sl2_pres, "D2"))
    assert len(lambda_orbit(sl2_ball, d)) == 6
    b = free_layer_ball.find(parse_word(free_layer_ball.pres, "b"))
    assert lambda_orbit(free_layer_ball, b, budget=10_000) is None


def test_lambda_orbit_needs_closed_table_members(sl2_pres) -> None:
    table = expand_ball(sl2_pres, 1)
    d = table.find(parse_word(sl2_pres, "D2"))
    with pytest.raises(CosetOutOfRangeError):
        lambda_orbit(table, d)


def test_index_examples(sl2_pres, bs23_pres) -> None:
    assert index(sl2_pres, sl2_pres.identity) == 1
    assert index(sl2_pres, parse_word(sl2_pres, "D2")) == 6
    assert index(bs23_pres, parse_word(bs23_pres, "a")) == 2
    assert index(bs23_pres, parse_word(bs23_pres, "a^-1")) == 3
    normal = build_presentation(BaumslagSolitarFamily(1, 1))
    assert index(normal, parse_word(normal, "a b a")) == 1


def test_lamplighter_index_past_the_lamp_window() -> None:
    family = LamplighterFamily(2)
    pres = build_presentation(family, max_radius=3)
    assert index(pres, family.shift(5)) == 32
    assert index(pres, family.shift(3)) == 8
    assert index(pres, family.shift(-5)) == 1
    assert len(pres.lambda_generators) == 3


@pytest.mark.parametrize("fixture, layer", [("sl2_ball", 3), ("bs23_ball", 3), ("lamp_ball", 3)])
def test_orbit_size_equals_index(request, fixture: str, layer: int) -> None:
    table = request.getfixturevalue(fixture)
    for cid in table.layer_ball(layer):
        orbit = lambda_orbit(table, cid)
        assert len(orbit) == index(table.pres, table.reps[cid])


def test_sphere_invariance(sl2_ball, bs23_ball, lamp_ball) -> None:
    for table in (sl2_ball, bs23_ball, lamp_ball):
        for cid in table.ball(2):
            assert {table.depths[m] for m in lambda_orbit(table, cid)} == {table.depths[cid]}


def test_coset_distance_examples(bs11_ball, sl2_ball, sl2_pres) -> None:
    a = lambda k: bs11_ball.find(parse_word(bs11_ball.pres, f"a^{k}"))
    assert coset_distance(bs11_ball, a(1), a(1)) == 0
    assert coset_distance(bs11_ball, a(1), a(3)) == 2
    d2 = sl2_ball.find(parse_word(sl2_pres, "D2^2"))
    assert coset_distance(sl2_ball, 0, d2) == 2


def test_coset_distance_out_of_range(sl2_pres) -> None:
    table = metric_ball(sl2_pres, 1)
    far = [c for c in table.ball(1) if table.depths[c] == 1]
    with pytest.raises(CosetOutOfRangeError) as info:
        for x, y in itertools.product(far, far):
            coset_distance(table, x, y)
    assert info.value.needed_radius == 2


@pytest.mark.parametrize("fixture", ["sl2_ball", "bs11_ball"])
def test_metric_axioms(request, fixture: str) -> None:
    table = request.getfixturevalue(fixture)
    points = table.ball(3)
    d = _distance_matrix(table, points)
    assert np.array_equal(d, d.T)
    assert np.all((d == 0) == np.eye(len(points), dtype=bool))
    assert np.all(d[:, None, :] <= d[:, :, None] + d[None, :, :])


@pytest.mark.parametrize("fixture, expected", [("sl2_ball", 31), ("bs11_ball", 5)])
def test_homogeneity(request, fixture: str, expected: int) -> None:
    table = request.getfixturevalue(fixture)
    outer = table.ball(4)
    assert len(table.ball(2)) == expected
    for x in table.ball(2):
        assert sum(1 for y in outer if coset_distance(table, x, y) <= 2) == expected


@pytest.mark.parametrize("fixture", ["bs23_ball", "lamp_ball"])
def test_distance_is_left_invariant(request, fixture: str) -> None:
    table = request.getfixturevalue(fixture)
    points = table.ball(1)
    for gen in table.pres.gamma_generators:
        for x, y in itertools.product(points, points):
            gx = table.find(multiply(gen.element, table.reps[x]))
            gy = table.find(multiply(gen.element, table.reps[y]))
            assert coset_distance(table, gx, gy) == coset_distance(table, x, y)


@pytest.mark.parametrize("fixture, first, second", [
    ("bs23_ball", "a", "b a"),
    ("lamp_ball", "t", "l t"),
])
def test_triangle_inequality_fails_off_the_tree_families(request, fixture: str, first: str, second: str) -> None:
    table = request.getfixturevalue(fixture)
    x = table.find(parse_word(table.pres, first))
    y = table.find(parse_word(table.pres, second))
    assert x != y
    assert table.depths[x] == table.depths[y] == 1
    assert coset_distance(table, x, y) == coset_distance(table, y, x) == 3
    assert coset_distance(table, x, y) > coset_distance(table, x, 0) + coset_distance(table, 0, y)


@pytest.mark.parametrize("fixture", ["bs23_ball", "lamp_ball"])
def test_symmetry_and_identity_off_the_tree_families(request, fixture: str) -> None:
    table = request.getfixturevalue(fixture)
    points = table.ball(1)
    d = _distance_matrix(table, points)
    assert np.array_equal(d, d.T)
    assert np.all((d == 0) == np.eye(len(points), dtype=bool))


def test_normal_case_degenerates(bs11_ball) -> None:
    pres = bs11_ball.pres
    cosets = {k: bs11_ball.find(parse_word(pres, f"a^{k}")) for k in range(-3, 4)}
    for i, j in itertools.product(cosets, cosets):
        assert coset_distance(bs11_ball, cosets[i], cosets[j]) == abs(i - j)
    assert all(dc.degree == 1 for dc in double_cosets_up_to(bs11_ball, 3))


def test_double_cosets(bs11_ball, sl2_ball, lamp_ball) -> None:
    assert len(double_cosets_up_to(bs11_ball, 2)) == 5
    sl2 = double_cosets_up_to(sl2_ball, 3)
    assert [dc.degree for dc in sl2] == [1, 6, 24, 96]
    assert [dc.depth for dc in sl2] == [0, 1, 2, 3]
    for table in (sl2_ball, lamp_ball):
        dcs = double_cosets_up_to(table, 2)
        members = sorted(m for dc in dcs for m in dc.members)
        assert members == table.ball(2)
        for dc in dcs:
            assert table.layers[dc.rep_id] == dc.depth
            assert table.find(dc.rep) == dc.rep_id


def test_hecke_verdicts(sl2_pres, bs23_pres, bs11_pres, lamp_pres, free_pres) -> None:
    for pres in (sl2_pres, bs23_pres, bs11_pres, lamp_pres):
        verdict = is_hecke_at(pres, 3)
        assert verdict.confirmed
        assert str(verdict) == "ConfirmedUpTo(3)"
    verdict = is_hecke_at(free_pres, 1, budget=10_000)
    assert not verdict.confirmed
    assert str(verdict) == "Unknown(10000)"


def test_enumerate_orbits_reports_escapes(free_layer_ball) -> None:
    scan = enumerate_orbits(free_layer_ball, 1, budget=200)
    assert not scan.complete
    assert scan.orbits[0] == (0, 1)


def test_closing_free_pair_runs_out_of_budget(free_pres) -> None:
    with pytest.raises(BudgetExceededError) as info:
        close_ball(expand_ball(free_pres, 1), budget=500)
    # the orbit of b.Lambda at layer 1 is infinite; only radius 0 closed
    assert info.value.completed_radius == 0


def test_growth_profiles(bs11_pres, sl2_pres, lamp_pres) -> None:
    profile = growth(bs11_pres, 3)
    assert [p.ball for p in profile.points] == [2 * r + 1 for r in range(4)]
    sl2 = growth(sl2_pres, 3)
    assert [p.ball for p in sl2.points] == [1, 7, 31, 127]
    assert [p.max_orbit for p in sl2.points] == [1, 6, 24, 96]
    assert [p.orbits for p in sl2.points] == [1, 2, 3, 4]
    lamp = growth(lamp_pres, 1)
    assert [p.ball for p in lamp.points] == [1, 4]
    csv_text = profile.to_csv()
    assert csv_text.splitlines()[0] == "radius,ball,orbits,max_orbit"
    assert csv_text.splitlines()[-1] == "3,7,7,1"


def test_growth_budget_keeps_partial_profile() -> None:
    pres = build_presentation(SpecialLinearFamily([2]), max_ball=100)
    with pytest.raises(BudgetExceededError) as info:
        growth(pres, 4)
    partial = info.value.partial
    assert [p.ball for p in partial.points] == [1, 7, 31]


def test_dot_export(bs11_pres) -> None:
    dot = to_dot(expand_ball(bs11_pres, 1))
    assert dot.startswith("digraph schreier {")
    assert 'c0 -> c1 [label="a"];' in dot
    assert dot.count(" -> ") == 4

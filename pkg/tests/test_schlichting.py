from __future__ import annotations

import json
from dataclasses import replace

import pytest

from coset_space import metric_ball
from errors import CosetOutOfRangeError, InvalidInputError
from group_core import LamplighterFamily, SpecialLinearFamily, build_presentation, parse_word
from schlichting import (
    StabilizerChain,
    core_probe,
    fmt_cycles,
    known_completion,
    level_action,
    level_order,
    level_report,
    restriction_check,
)


def test_stabilizer_chain_orders() -> None:
    chain = StabilizerChain(4)
    chain.add_gen([1, 2, 3, 0])
    chain.add_gen([1, 0, 2, 3])
    assert chain.order() == 24
    klein = StabilizerChain(4)
    klein.add_gen([1, 0, 3, 2])
    klein.add_gen([2, 3, 0, 1])
    assert klein.order() == 4
    assert StabilizerChain(3).order() == 1


def test_fmt_cycles() -> None:
    assert fmt_cycles([0, 1, 2]) == "()"
    assert fmt_cycles([1, 2, 0, 3]) == "(0 1 2)"
    assert fmt_cycles([1, 0, 3, 2], labels=[10, 11, 12, 13]) == "(10 11)(12 13)"


def test_level_orders(sl2_ball, bs23_ball, lamp_ball) -> None:
    assert level_order(level_action(sl2_ball, 0)) == 1
    assert level_order(level_action(sl2_ball, 1)) == 24
    assert level_order(level_action(bs23_ball, 1)) == 6
    assert level_order(level_action(lamp_ball, 2)) == 4


def test_levels_form_an_inverse_system(sl2_ball, bs23_ball, lamp_ball, bs11_ball) -> None:
    for table in (sl2_ball, bs23_ball, lamp_ball, bs11_ball):
        levels = [level_action(table, r) for r in range(4)]
        for lo, hi in zip(levels, levels[1:]):
            assert restriction_check(hi, lo)
            assert level_order(hi) % level_order(lo) == 0


def test_restriction_detects_a_corrupted_permutation(sl2_ball) -> None:
    lo = level_action(sl2_ball, 1)
    hi = level_action(sl2_ball, 2)
    pos = hi.position()
    i, j = pos[lo.carrier[1]], pos[lo.carrier[2]]
    bad = list(hi.permutations[0])
    a, b = bad.index(i), bad.index(j)
    bad[a], bad[b] = j, i
    corrupted = replace(hi, permutations=(tuple(bad),) + hi.permutations[1:], _order=None)
    assert not restriction_check(corrupted, lo)
    with pytest.raises(InvalidInputError):
        restriction_check(lo, hi)


def test_generators_preserve_spheres(sl2_ball, bs23_ball, lamp_ball, bs11_ball) -> None:
    for table in (sl2_ball, bs23_ball, lamp_ball, bs11_ball):
        for level in range(4):
            flc = level_action(table, level)
            assert flc.preserves_spheres()
            for perm in flc.permutations:
                assert sorted(flc.depths[j] for j in perm) == sorted(flc.depths)
    flc = level_action(sl2_ball, 1)
    inner, outer = flc.depths.index(0), flc.depths.index(1)
    bad = list(flc.permutations[0])
    a, b = bad.index(inner), bad.index(outer)
    bad[a], bad[b] = outer, inner
    assert not replace(flc, permutations=(tuple(bad),) + flc.permutations[1:]).preserves_spheres()


def test_level_action_needs_the_ball(sl2_pres) -> None:
    with pytest.raises(CosetOutOfRangeError):
        level_action(metric_ball(sl2_pres, 1), 2)


def test_core_probe(sl2_ball, sl2_pres, bs23_ball, bs23_pres) -> None:
    minus_one = parse_word(sl2_pres, "S^2")
    report = core_probe(sl2_ball, [minus_one, parse_word(sl2_pres, "T")], 3, labels=["S^2", "T"])
    trivial, moving = report.probes
    assert trivial.trivial and trivial.max_level == 3
    assert moving.level == 1
    b = core_probe(bs23_ball, [parse_word(bs23_pres, "b")], 2).probes[0]
    assert b.level == 1
    data = json.loads(report.to_json())
    assert data["probes"][0] == {"element": "S^2", "level": None, "trivial_up_to": 3}
    with pytest.raises(InvalidInputError):
        core_probe(sl2_ball, [parse_word(sl2_pres, "D2")], 2)


def test_lamplighter_core_is_trivial_on_the_window(lamp_ball, lamp_pres) -> None:
    # lamps far to the right act trivially on small balls
    far_lamp = LamplighterFamily(2).lamp(5)
    probe = core_probe(lamp_ball, [far_lamp], 2).probes[0]
    assert probe.trivial
    assert core_probe(lamp_ball, [parse_word(lamp_pres, "l")], 2).probes[0].level == 1


def test_level_report(bs23_ball) -> None:
    report = level_report(level_action(bs23_ball, 1))
    assert report["level"] == 1
    assert report["carrier_size"] == 6
    assert report["order"] == 6
    assert [g["generator"] for g in report["generator_cycles"]] == ["b", "b^-1"]
    json.dumps(report)


def test_known_completion(sl2_pres, bs11_pres, bs23_pres, lamp_pres) -> None:
    assert known_completion(sl2_pres) == "PSL(2,Q_2)"
    assert known_completion(bs11_pres) == "Γ/Λ"
    assert known_completion(bs23_pres) is None
    assert known_completion(lamp_pres) == "(∏_N Z/2 ⊕ ⊕_(Z∖N) Z/2) ⋊ Z"
    assert known_completion(build_presentation(SpecialLinearFamily([2, 3]), max_radius=2)) is None


def test_normal_subgroup_has_trivial_levels(bs11_ball) -> None:
    for level in range(4):
        assert level_order(level_action(bs11_ball, level)) == 1

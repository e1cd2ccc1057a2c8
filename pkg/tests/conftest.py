from __future__ import annotations

import random

import pytest

from coset_space import expand_ball, metric_ball
from group_core import (
    BaumslagSolitarFamily,
    FreeFamily,
    LamplighterFamily,
    PairPresentation,
    SpecialLinearFamily,
    build_presentation,
    word_element,
)


@pytest.fixture(scope="session")
def sl2_pres() -> PairPresentation:
    return build_presentation(SpecialLinearFamily([2]))


@pytest.fixture(scope="session")
def bs23_pres() -> PairPresentation:
    return build_presentation(BaumslagSolitarFamily(2, 3))


@pytest.fixture(scope="session")
def bs11_pres() -> PairPresentation:
    return build_presentation(BaumslagSolitarFamily(1, 1))


@pytest.fixture(scope="session")
def lamp_pres() -> PairPresentation:
    return build_presentation(LamplighterFamily(2))


@pytest.fixture(scope="session")
def free_pres() -> PairPresentation:
    return build_presentation(FreeFamily())


@pytest.fixture(scope="session")
def sl2_ball(sl2_pres):
    return metric_ball(sl2_pres, 6)


@pytest.fixture(scope="session")
def bs23_ball(bs23_pres):
    return metric_ball(bs23_pres, 3)


@pytest.fixture(scope="session")
def bs11_ball(bs11_pres):
    return metric_ball(bs11_pres, 6)


@pytest.fixture(scope="session")
def lamp_ball(lamp_pres):
    return metric_ball(lamp_pres, 4)


@pytest.fixture(scope="session")
def free_layer_ball(free_pres):
    return expand_ball(free_pres, 2)


def random_element(pres: PairPresentation, rng: random.Random, max_length: int = 6):
    word = [rng.randrange(len(pres.gamma_generators)) for _ in range(rng.randint(0, max_length))]
    return word_element(pres, word)

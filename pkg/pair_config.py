"""
Pair configuration files
Flat key=value text validated with pydantic, turned into a PairPresentation
"""

from __future__ import annotations

import hashlib
import logging
from pathlib import Path
from typing import List, Literal, Optional, Union

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from config import config
from errors import InvalidInputError
from group_core import (
    BaumslagSolitarFamily,
    FreeFamily,
    GroupFamily,
    LamplighterFamily,
    PairPresentation,
    SpecialLinearFamily,
    is_prime,
    build_presentation,
)

logger = logging.getLogger(__name__)

FamilyName = Literal['sl2_s_integers', 'baumslag_solitar', 'lamplighter', 'free2']


class PairConfig(BaseModel):
    """A Hecke pair instance with its budgets"""
    family: FamilyName = Field(description="Group family tag")
    primes: List[int] = Field(default_factory=list, description="Prime set S for sl2_s_integers")
    dimension: int = Field(default=2, description="Matrix size n for sl2_s_integers")
    m: Optional[int] = Field(default=None, description="BS(m, n) parameter m")
    n: Optional[int] = Field(default=None, description="BS(m, n) parameter n")
    lamp_order: Optional[int] = Field(default=None, description="Order of the lamp group Z/q")
    max_ball: int = Field(default_factory=lambda: config.MAX_BALL, gt=0, description="Largest ball table")
    max_orbit: int = Field(default_factory=lambda: config.MAX_ORBIT, gt=0, description="Largest orbit enumerated")
    max_radius: int = Field(default_factory=lambda: config.MAX_RADIUS, ge=0, description="Largest table radius")
    tol: float = Field(default_factory=lambda: config.TOL, gt=0, description="Kernel tolerance")

    @field_validator('primes', mode='before')
    @classmethod
    def split_primes(cls, value):
        if isinstance(value, str):
            return [int(p) for p in value.replace(',', ' ').split()]
        return value

    @model_validator(mode='after')
    def check_family_parameters(self) -> 'PairConfig':
        if self.family == 'sl2_s_integers':
            if not self.primes or not all(is_prime(p) for p in self.primes):
                raise ValueError(f"primes must be a nonempty list of primes, got {self.primes}")
            if self.dimension < 2:
                raise ValueError(f"dimension must be at least 2, got {self.dimension}")
        elif self.family == 'baumslag_solitar':
            if self.m is None or self.n is None or self.m < 1 or self.n < 1:
                raise ValueError(f"baumslag_solitar needs m, n >= 1, got m={self.m}, n={self.n}")
        elif self.family == 'lamplighter':
            if self.lamp_order is None or self.lamp_order < 2:
                raise ValueError(f"lamplighter needs lamp_order >= 2, got {self.lamp_order}")
        return self

    def build_family(self) -> GroupFamily:
        if self.family == 'sl2_s_integers':
            return SpecialLinearFamily(self.primes, self.dimension)
        if self.family == 'baumslag_solitar':
            return BaumslagSolitarFamily(self.m, self.n)
        if self.family == 'lamplighter':
            return LamplighterFamily(self.lamp_order)
        return FreeFamily()

    def presentation(self, use_coset_keys: bool = True) -> PairPresentation:
        return build_presentation(
            self.build_family(),
            max_ball=self.max_ball,
            max_orbit=self.max_orbit,
            max_radius=self.max_radius,
            use_coset_keys=use_coset_keys,
        )

    def to_text(self) -> str:
        """Canonical key=value rendering (fixed key order)"""
        lines = [f"family={self.family}"]
        if self.family == 'sl2_s_integers':
            lines.append(f"primes={','.join(str(p) for p in sorted(set(self.primes)))}")
            lines.append(f"dimension={self.dimension}")
        elif self.family == 'baumslag_solitar':
            lines += [f"m={self.m}", f"n={self.n}"]
        elif self.family == 'lamplighter':
            lines.append(f"lamp_order={self.lamp_order}")
        lines += [f"max_ball={self.max_ball}", f"max_orbit={self.max_orbit}",
                  f"max_radius={self.max_radius}", f"tol={self.tol!r}"]
        return '\n'.join(lines) + '\n'

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_text().encode('utf-8')).hexdigest()


def parse_pair_config(text: str) -> PairConfig:
    """
    Parse key=value lines; blank lines and '#' comments are skipped

    Raises:
        InvalidInputError: Malformed line, unknown key or invalid parameters
    """
    data = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition('=')
        if not sep:
            raise InvalidInputError(f"line {lineno}: expected key=value, got {raw!r}")
        key = key.strip()
        if key not in PairConfig.model_fields:
            raise InvalidInputError(f"line {lineno}: unknown key {key!r}")
        data[key] = value.strip()
    try:
        return PairConfig(**data)
    except ValidationError as e:
        logger.error(f"❌ Invalid pair configuration: {e.error_count()} error(s)")
        raise InvalidInputError(f"invalid pair configuration: {e}") from e


def load_pair_config(path: Union[str, Path]) -> PairConfig:
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as e:
        raise InvalidInputError(f"cannot read config {path}: {e}") from e
    return parse_pair_config(text)

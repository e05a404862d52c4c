"""
Besov index triples and measure conventions.
"""

import math
from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, field_validator


class Measure(str, Enum):
    """Spatial measure used by every L^p quadrature."""

    NORMALIZED = "normalized"
    LEBESGUE = "lebesgue"


class FieldSelector(str, Enum):
    """Which component of a state trajectory a norm is taken over."""

    V = "v"
    W = "w"
    PAIR = "pair"


class BesovIndex(BaseModel):
    """Regularity s, integrability p and summability q of a homogeneous Besov space."""

    model_config = ConfigDict(frozen=True)

    s: float = Field(..., description="Regularity")
    p: float = Field(2.0, ge=1, description="Integrability, inf allowed")
    q: float = Field(2.0, ge=1, description="Summability, inf allowed")

    @field_validator("s")
    @classmethod
    def validate_s(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("s must be finite")
        return v

    @classmethod
    def critical(cls, n: int, p: float, q: float) -> "BesovIndex":
        """
        Scale-invariant index s = -2 + n/p inside the existence range

        Args:
            n: Spatial dimension
            p: Integrability, 2 <= p < 2n
            q: Summability, 1 <= q <= inf

        Returns:
            BesovIndex: Critical index

        Raises:
            ValueError: If p is outside [2, 2n)
        """
        validate_theorem_range(n, p, q)
        return cls(s=-2.0 + n / p, p=p, q=q)

    @classmethod
    def monitor(cls, n: int, p: float, q: float, r1: float) -> "BesovIndex":
        """Index s = -2 + n/p + 2/r1 of the fixed-point monitor space."""
        validate_theorem_range(n, p, q)
        return cls(s=-2.0 + n / p + 2.0 / r1, p=p, q=q)

    def shifted(self, ds: float) -> "BesovIndex":
        return BesovIndex(s=self.s + ds, p=self.p, q=self.q)



def validate_theorem_range(n: int, p: float, q: float) -> None:
    """Reject (n, p, q) outside 2 <= p < 2n, 1 <= q <= inf."""
    if not (2.0 <= p < 2.0 * n):
        raise ValueError(f"p must satisfy 2 <= p < 2n = {2 * n}, got {p}")
    if not q >= 1.0:
        raise ValueError(f"q must satisfy q >= 1, got {q}")

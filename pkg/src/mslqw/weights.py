"""Self-loop weight schemes and the even split of the weight over ``m`` loops."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum


class InvalidConfigurationError(ValueError):
    pass


class SchemeKind(str, Enum):
    DEGREE_OVER_N = "n_over_N"
    DEGREE_OVER_N_TIMES_K = "n_over_N_times_k"
    DEGREE_POW_OVER_N = "n_pow_over_N"
    DEGREE_POW_OVER_N_TIMES_K = "n_pow_over_N_times_k"
    EXPLICIT = "explicit"


_POW_KINDS = (SchemeKind.DEGREE_POW_OVER_N, SchemeKind.DEGREE_POW_OVER_N_TIMES_K)
_K_KINDS = (SchemeKind.DEGREE_OVER_N_TIMES_K, SchemeKind.DEGREE_POW_OVER_N_TIMES_K)


@dataclass(frozen=True)
class WeightScheme:
    """How the total self-loop weight ``l`` is derived from (n, N, k).

    ``alpha`` is the exponent on the degree; it is fixed to 1 for the two
    plain schemes and defaults to 2 for the power schemes.
    """

    kind: SchemeKind
    alpha: float = 1.0
    value: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", SchemeKind(self.kind))
        if self.kind in _POW_KINDS:
            if not self.alpha > 0:
                raise InvalidConfigurationError("alpha must be positive")
        elif self.alpha != 1.0:
            raise InvalidConfigurationError(f"alpha is fixed to 1 for {self.kind.value}")
        if self.kind is SchemeKind.EXPLICIT and not (self.value >= 0 and math.isfinite(self.value)):
            raise InvalidConfigurationError("explicit weight must be a finite value >= 0")

    @classmethod
    def parse(cls, text: str) -> "WeightScheme":
        """Parse a CLI/config name such as ``"n_pow_over_N_times_k"`` or ``"explicit:0.5"``.

        Power schemes accept an optional exponent suffix, ``"n_pow_over_N:3"``.
        """
        name, _, arg = text.strip().partition(":")
        try:
            kind = SchemeKind(name)
        except ValueError:
            raise InvalidConfigurationError(f"unknown weight scheme {text!r}") from None
        if kind is SchemeKind.EXPLICIT:
            if not arg:
                raise InvalidConfigurationError("explicit scheme needs a value, e.g. explicit:0.5")
            return cls(kind, value=float(arg))
        if kind in _POW_KINDS:
            return cls(kind, alpha=float(arg) if arg else 2.0)
        if arg:
            raise InvalidConfigurationError(f"{name} takes no argument")
        return cls(kind)

    @property
    def name(self) -> str:
        if self.kind is SchemeKind.EXPLICIT:
            return f"explicit:{self.value!r}"
        if self.kind in _POW_KINDS and self.alpha != 2.0:
            return f"{self.kind.value}:{self.alpha!r}"
        return self.kind.value

    @property
    def depends_on_k(self) -> bool:
        return self.kind in _K_KINDS

    def __str__(self) -> str:
        return self.name


def self_loop_weight(scheme: WeightScheme | str, n: int, N: int | None = None, k: int = 1) -> float:
    if isinstance(scheme, str):
        scheme = WeightScheme.parse(scheme)
    if N is None:
        N = 1 << n
    if N != 1 << n:
        raise InvalidConfigurationError(f"N={N} is not 2^{n}")
    if scheme.kind is SchemeKind.EXPLICIT:
        return float(scheme.value)
    base = float(n) ** scheme.alpha / N
    if scheme.depends_on_k:
        if k < 1:
            raise InvalidConfigurationError(f"scheme {scheme.name} needs k >= 1, got {k}")
        return base * k
    return base


@dataclass(frozen=True)
class LoopWeights:
    total: float
    per_loop: float
    count: int


def split_per_loop(l: float, m: int) -> LoopWeights:
    if m < 0:
        raise InvalidConfigurationError("loop count must be >= 0")
    if l < 0:
        raise InvalidConfigurationError("self-loop weight must be >= 0")
    if m == 0:
        if l > 0:
            raise InvalidConfigurationError("m = 0 requires l = 0")
        return LoopWeights(0.0, 0.0, 0)
    return LoopWeights(float(l), l / m, m)

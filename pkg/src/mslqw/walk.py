"""Structured state-vector kernel for the multi-self-loop lackadaisical walk.

The state is a real float64 vector of length ``(n + m) * N`` laid out
coin-major: amplitude of coin direction ``c`` at vertex ``x`` lives at
``c * N + x``. Directions ``0 .. n-1`` are hypercube edges, ``n .. n+m-1``
are the self-loops. Every operator is a real orthogonal map, so amplitudes
stay real for the whole evolution.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .hypercube import MarkedSet
from .weights import (InvalidConfigurationError, LoopWeights, SchemeKind,
                      WeightScheme, self_loop_weight, split_per_loop)


class OracleMode(str, Enum):
    PARTIAL = "partial"
    FULL = "full"
    NONE = "none"


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class WalkConfig:
    """Static description of one walk.

    ``s`` is the number of self-loops whose phase the partial oracle flips
    (the first ``s`` loop directions). It defaults to ``min(1, m)``.
    """

    n: int
    m: int = 1
    s: Optional[int] = None
    scheme: WeightScheme = field(default_factory=lambda: WeightScheme(SchemeKind.DEGREE_OVER_N))
    oracle: OracleMode = OracleMode.PARTIAL

    def __post_init__(self):
        if isinstance(self.scheme, str):
            object.__setattr__(self, "scheme", WeightScheme.parse(self.scheme))
        object.__setattr__(self, "oracle", OracleMode(self.oracle))
        if self.s is None:
            object.__setattr__(self, "s", min(1, self.m))
        if self.n < 1:
            raise InvalidConfigurationError("hypercube degree n must be >= 1")
        if self.m < 0:
            raise InvalidConfigurationError("self-loop count m must be >= 0")
        if not 0 <= self.s <= self.m:
            raise InvalidConfigurationError(f"need 0 <= s <= m, got s={self.s}, m={self.m}")
        if self.oracle is OracleMode.PARTIAL and (self.m < 1 or self.s < 1):
            raise InvalidConfigurationError("partial inversion needs m >= 1 and s >= 1")
        if self.m == 0 and not (self.scheme.kind is SchemeKind.EXPLICIT and self.scheme.value == 0):
            raise InvalidConfigurationError("m = 0 is only allowed with the explicit:0 scheme")

    @property
    def N(self) -> int:
        return 1 << self.n

    @property
    def coin_dim(self) -> int:
        return self.n + self.m

    @property
    def dim(self) -> int:
        return self.coin_dim * self.N

    @property
    def inverted_directions(self) -> int:
        """Number of leading coin directions the oracle negates at a marked vertex."""
        if self.oracle is OracleMode.PARTIAL:
            return self.n + self.s
        if self.oracle is OracleMode.FULL:
            return self.coin_dim
        return 0

    def loop_weights(self, k: int = 1) -> LoopWeights:
        l = self_loop_weight(self.scheme, self.n, self.N, k)
        return split_per_loop(l, self.m)

    def coin_axis(self, k: int = 1) -> np.ndarray:
        """Normalised weighted-uniform coin vector, edges first then loops."""
        w = self.loop_weights(k)
        axis = np.empty(self.coin_dim)
        axis[:self.n] = 1.0
        axis[self.n:] = math.sqrt(w.per_loop)
        axis /= math.sqrt(self.n + w.total)
        return axis

    def default_horizon(self) -> int:
        return math.ceil(6.0 * math.sqrt(self.dim)) + 100

    def to_json(self) -> dict:
        return {"n": self.n, "m": self.m, "s": self.s,
                "scheme": self.scheme.name, "oracle": self.oracle.value}


def _blocks(state: np.ndarray, config: WalkConfig) -> np.ndarray:
    if state.ndim != 1 or state.shape[0] != config.dim:
        raise DimensionError(f"state has shape {state.shape}, expected ({config.dim},)")
    return state.reshape(config.coin_dim, config.N)


def _check_marked(marked: MarkedSet, config: WalkConfig) -> np.ndarray:
    if marked.n != config.n:
        raise DimensionError(f"marked set lives on the {marked.n}-cube, walk on the {config.n}-cube")
    return marked.as_array()


def initial_state(config: WalkConfig, k: int = 1) -> np.ndarray:
    """Coin axis tensored with the uniform vertex superposition."""
    axis = config.coin_axis(k) / math.sqrt(config.N)
    return np.repeat(axis, config.N)


def apply_coin(state: np.ndarray, config: WalkConfig, k: int = 1, *,
               axis: Optional[np.ndarray] = None, inplace: bool = False) -> np.ndarray:
    """Reflect every vertex's coin block about the coin axis: psi -> 2<a|psi>a - psi."""
    blocks = _blocks(state, config)
    if axis is None:
        axis = config.coin_axis(k)
    proj = axis @ blocks
    proj *= 2.0
    out = state if inplace else state.copy()
    ob = out.reshape(blocks.shape)
    np.negative(ob, out=ob)
    ob += np.outer(axis, proj)
    return out


def apply_shift(state: np.ndarray, config: WalkConfig, *, inplace: bool = False) -> np.ndarray:
    """Move edge amplitudes (i, x) -> (i, x ^ 2^i); self-loop amplitudes stay put."""
    blocks = _blocks(state, config)
    out = state if inplace else state.copy()
    ob = out.reshape(blocks.shape)
    for i in range(config.n):
        # bit i of x indexes the middle axis; reversing it flips that bit
        plane = blocks[i].reshape(-1, 2, 1 << i)
        ob[i] = plane[:, ::-1, :].reshape(-1)
    return out


def _negate_marked(state, marked, config, ncomp, inplace):
    blocks = _blocks(state, config)
    idx = _check_marked(marked, config)
    out = state if inplace else state.copy()
    if ncomp and idx.size:
        ob = out.reshape(blocks.shape)
        ob[:ncomp, idx] *= -1.0
    return out


def apply_oracle_partial(state: np.ndarray, marked: MarkedSet, config: WalkConfig, *,
                         inplace: bool = False) -> np.ndarray:
    """Negate the ``n`` edge components and the first ``s`` loop components of marked vertices."""
    if config.oracle is not OracleMode.PARTIAL:
        raise InvalidConfigurationError("config is not in partial-inversion mode")
    return _negate_marked(state, marked, config, config.n + config.s, inplace)


def apply_oracle_full(state: np.ndarray, marked: MarkedSet, config: WalkConfig, *,
                      inplace: bool = False) -> np.ndarray:
    """Negate every coin component of the marked vertices."""
    if config.oracle is not OracleMode.FULL:
        raise InvalidConfigurationError("config is not in full-inversion mode")
    return _negate_marked(state, marked, config, config.coin_dim, inplace)


def apply_oracle(state, marked, config, *, inplace=False):
    if config.oracle is OracleMode.PARTIAL:
        return apply_oracle_partial(state, marked, config, inplace=inplace)
    if config.oracle is OracleMode.FULL:
        return apply_oracle_full(state, marked, config, inplace=inplace)
    _check_marked(marked, config)
    return state if inplace else state.copy()


def step(state: np.ndarray, marked: MarkedSet, config: WalkConfig, k: Optional[int] = None, *,
         inplace: bool = False) -> np.ndarray:
    """One evolution step: oracle, then coin, then shift.

    ``k`` selects the weight for k-dependent schemes and defaults to the
    size of ``marked``.
    """
    if k is None:
        k = len(marked)
    out = apply_oracle(state, marked, config, inplace=inplace)
    apply_coin(out, config, k, inplace=True)
    apply_shift(out, config, inplace=True)
    return out


def success_probability(state: np.ndarray, marked: MarkedSet) -> float:
    """Total squared amplitude on the marked vertices, summed over coin directions."""
    N = 1 << marked.n
    if state.ndim != 1 or state.shape[0] % N:
        raise DimensionError(f"state length {state.shape[0]} is not a multiple of N={N}")
    if not len(marked):
        return 0.0
    cols = state.reshape(-1, N)[:, marked.as_array()]
    return float(np.sum(cols * cols))


def first_lobe_peak(series, level: float = 0.5, reach: float = 0.9) -> int:
    """Step of the highest point in the first lobe of a success series.

    The success probability of a search walk rises and falls periodically and
    later lobes repeat the first one to within rounding, so the global argmax
    over a long window lands on an arbitrary repetition.  A lobe here is a
    maximal run of steps at or above ``level`` times the global peak; the first
    lobe whose own maximum reaches ``reach`` times the global peak is used
    (this skips brief excursions above ``level`` that never reach the peak).
    """
    p = np.asarray(series, dtype=float)
    top = float(p.max())
    above = p >= level * top
    t = 0
    while t < p.size:
        if not above[t]:
            t += 1
            continue
        end = t
        while end < p.size and above[end]:
            end += 1
        if p[t:end].max() >= reach * top:
            return t + int(np.argmax(p[t:end]))
        t = end
    return int(np.argmax(p))


@dataclass
class WalkResult:
    """Success-probability series of one walk and its peak.

    ``peak_step`` is the first step attaining the maximum over the whole
    series; ``first_peak_step`` is the top of the first lobe (see
    :func:`first_lobe_peak`), the step count a search would actually stop at.
    """
    probabilities: np.ndarray
    peak_probability: float
    peak_step: int
    first_peak_step: int = -1

    @property
    def steps_run(self) -> int:
        return len(self.probabilities) - 1

    @classmethod
    def from_series(cls, series) -> "WalkResult":
        series = np.asarray(series, dtype=float)
        i = int(np.argmax(series))
        return cls(series, float(series[i]), i, first_lobe_peak(series))

    def to_json(self) -> dict:
        return {"peak_probability": self.peak_probability, "peak_step": self.peak_step,
                "first_peak_step": self.first_peak_step,
                "series": [float(p) for p in self.probabilities]}

    def to_csv(self) -> str:
        lines = ["step,probability"]
        lines += [f"{t},{p!r}" for t, p in enumerate(self.probabilities.tolist())]
        return "\n".join(lines) + "\n"

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def evolve(config: WalkConfig, marked: MarkedSet, steps: int, k: Optional[int] = None, *,
           state: Optional[np.ndarray] = None, kernel: str = "auto") -> tuple[np.ndarray, np.ndarray]:
    """Apply ``steps`` evolution steps; return ``(final_state, success_series)``.

    The series has ``steps + 1`` entries, entry 0 being the starting state.
    ``kernel`` is ``"numpy"`` (operator by operator) or ``"fused"`` (one
    compiled pass per step); ``"auto"`` uses the fused kernel when numba
    is importable.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if k is None:
        k = len(marked)
    idx = _check_marked(marked, config)
    axis = config.coin_axis(k)
    if state is None:
        state = initial_state(config, k)
    else:
        state = np.array(_blocks(np.asarray(state, dtype=np.float64), config).reshape(-1))
    if kernel == "auto":
        kernel = "fused" if _fused_available() else "numpy"
    if kernel == "fused":
        from ._fused import evolve as fused_evolve
        blocks = state.reshape(config.coin_dim, config.N)
        groups = _loop_groups(config, blocks)
        if groups is None:
            series, final = fused_evolve(blocks, axis, idx, config.n, config.inverted_directions, steps)
            return final.reshape(-1), series
        # each group of equal self-loops travels as one component scaled by sqrt(size)
        n = config.n
        scale = np.sqrt([float(stop - start) for start, stop in groups])
        small = np.vstack([blocks[:n]] + [blocks[start] * f for (start, _), f in zip(groups, scale)])
        small_axis = np.concatenate([axis[:n], [axis[start] * f for (start, _), f in zip(groups, scale)]])
        ninv = config.inverted_directions
        if ninv > n:
            ninv = n + 1  # the negated loops always form the first group
        series, final = fused_evolve(small, small_axis, idx, n, ninv, steps)
        out = np.empty_like(blocks)
        out[:n] = final[:n]
        for g, ((start, stop), f) in enumerate(zip(groups, scale)):
            out[start:stop] = final[n + g] / f
        return out.reshape(-1), series
    if kernel != "numpy":
        raise ValueError(f"unknown kernel {kernel!r}")
    series = np.empty(steps + 1)
    series[0] = success_probability(state, marked)
    for t in range(1, steps + 1):
        apply_oracle(state, marked, config, inplace=True)
        apply_coin(state, config, axis=axis, inplace=True)
        apply_shift(state, config, inplace=True)
        series[t] = success_probability(state, marked)
    return state, series


def _loop_groups(config: WalkConfig, blocks: np.ndarray):
    """Index ranges of self-loops that stay equal under the evolution, or None.

    Loops the oracle negates together and loops it leaves alone each receive
    identical updates, so a group whose rows are equal now stays equal.
    Returns None when nothing would be saved or the rows differ.
    """
    n, m = config.n, config.m
    cut = min(max(config.inverted_directions - n, 0), m)
    groups = [(start, stop) for start, stop in ((n, n + cut), (n + cut, n + m)) if stop > start]
    if all(stop - start == 1 for start, stop in groups):
        return None
    for start, stop in groups:
        if not np.array_equal(blocks[start:stop], np.broadcast_to(blocks[start], (stop - start, config.N))):
            return None
    return groups


def run_walk(config: WalkConfig, marked: MarkedSet, horizon: Optional[int] = None,
             k: Optional[int] = None, *, kernel: str = "auto") -> WalkResult:
    """Evolve from the initial state for ``horizon`` steps and report the success peak.

    ``horizon`` defaults to ``config.default_horizon()``; ``k`` (the count fed
    to k-dependent weight schemes) defaults to the number of marked vertices.
    """
    if horizon is None:
        horizon = config.default_horizon()
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    _, series = evolve(config, marked, horizon, k, kernel=kernel)
    return WalkResult.from_series(series)


def _fused_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True

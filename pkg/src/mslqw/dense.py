"""Literal dense matrices for small walks, used only to check the structured kernel."""
from __future__ import annotations

import numpy as np

from .hypercube import MarkedSet
from .walk import OracleMode, WalkConfig

MAX_DENSE_DIM = 4096


class DenseCapError(ValueError):
    pass


def _check_cap(config: WalkConfig) -> int:
    if config.dim > MAX_DENSE_DIM:
        raise DenseCapError(f"dense operator of dimension {config.dim} exceeds cap {MAX_DENSE_DIM}")
    return config.dim


def _index(c: int, x: int, N: int) -> int:
    return c * N + x


def build_shift_dense(config: WalkConfig) -> np.ndarray:
    """Sum over edges of |i, x^e_i><i, x|, plus identity on the self-loop directions."""
    dim = _check_cap(config)
    N = config.N
    S = np.zeros((dim, dim))
    for c in range(config.coin_dim):
        for x in range(N):
            y = x ^ (1 << c) if c < config.n else x
            S[_index(c, y, N), _index(c, x, N)] = 1.0
    return S


def build_coin_dense(config: WalkConfig, k: int = 1) -> np.ndarray:
    """(2|s><s| - I) on the coin space, tensored with the vertex identity."""
    _check_cap(config)
    s = config.coin_axis(k)
    C = 2.0 * np.outer(s, s) - np.eye(config.coin_dim)
    # coin-major layout means coin acts on the left factor
    return np.kron(C, np.eye(config.N))


def build_oracle_dense(config: WalkConfig, marked: MarkedSet,
                       mode: OracleMode | str | None = None) -> np.ndarray:
    """Diagonal +-1 matrix built term by term from its projector sum."""
    dim = _check_cap(config)
    mode = config.oracle if mode is None else OracleMode(mode)
    N = config.N
    Q = np.eye(dim)
    if mode is OracleMode.NONE:
        return Q
    for w in marked:
        for i in range(config.n):
            e = np.zeros(dim)
            e[_index(i, w, N)] = 1.0
            Q -= 2.0 * np.outer(e, e)
        loops = range(config.s) if mode is OracleMode.PARTIAL else range(config.m)
        for j in loops:
            e = np.zeros(dim)
            e[_index(config.n + j, w, N)] = 1.0
            Q -= 2.0 * np.outer(e, e)
    return Q


def build_evolution_dense(config: WalkConfig, marked: MarkedSet,
                          mode: OracleMode | str | None = None, k: int | None = None) -> np.ndarray:
    if k is None:
        k = len(marked)
    return build_shift_dense(config) @ build_coin_dense(config, k) @ build_oracle_dense(config, marked, mode)


def dense_step(config: WalkConfig, marked: MarkedSet, mode: OracleMode | str | None,
               state: np.ndarray, k: int | None = None) -> np.ndarray:
    if state.shape != (_check_cap(config),):
        raise ValueError(f"state shape {state.shape} does not match dimension {config.dim}")
    return build_evolution_dense(config, marked, mode, k) @ state

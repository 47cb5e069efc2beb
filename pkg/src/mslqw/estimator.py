"""scikit-learn style front end: marked sets in, (peak probability, peak step) out."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .hypercube import MarkedSet, is_mutually_non_adjacent
from .walk import WalkConfig, WalkResult, run_walk


def check_marked_sets(X, n: int, *, require_non_adjacent: bool = False) -> list[MarkedSet]:
    """Coerce ``X`` into a list of :class:`MarkedSet` on the ``n``-cube.

    ``X`` may be a 2-D integer array (one marked set per row; negative
    entries are padding), a list of vertex lists, or a list of MarkedSet.
    """
    if isinstance(X, MarkedSet):
        X = [X]
    if isinstance(X, np.ndarray):
        if X.ndim != 2:
            raise ValueError(f"expected a 2-D array of marked sets, got shape {X.shape}")
        if not np.issubdtype(X.dtype, np.integer):
            if not np.all(np.equal(np.mod(X, 1), 0)):
                raise ValueError("vertex ids must be integers")
            X = X.astype(np.int64)
        rows = [[int(v) for v in row if v >= 0] for row in X]
    else:
        rows = list(X)
    if not rows:
        raise ValueError("no marked sets given")
    out = []
    for row in rows:
        ms = row if isinstance(row, MarkedSet) else MarkedSet(n, tuple(int(v) for v in row))
        if ms.n != n:
            raise ValueError(f"marked set on the {ms.n}-cube passed to an estimator on the {n}-cube")
        if require_non_adjacent and not is_mutually_non_adjacent(ms):
            raise ValueError(f"marked set {ms.vertices} has adjacent vertices")
        out.append(ms)
    return out


class LackadaisicalSearch(TransformerMixin, BaseEstimator):
    """Multi-self-loop lackadaisical walk search on the ``n``-cube.

    ``fit`` validates the configuration; ``transform`` runs one walk per
    marked set and returns an ``(n_samples, 3)`` array of peak success
    probability, peak step and first-lobe peak step. ``score`` is the mean peak probability, so
    the estimator drops into ``GridSearchCV``-style sweeps over ``m``.

    Parameters
    ----------
    n : int
        Hypercube degree.
    m : int
        Self-loops per vertex.
    s : int or None
        Loops phase-inverted by the partial oracle; ``None`` means ``min(1, m)``.
    scheme : str
        Weight scheme name, e.g. ``"n_pow_over_N_times_k"``.
    oracle : {"partial", "full", "none"}
    horizon : int or None
        Steps per walk; ``None`` uses the config's default horizon.
    kernel : {"auto", "fused", "numpy"}
    """

    def __init__(self, n=12, m=1, s=None, scheme="n_pow_over_N_times_k", oracle="partial",
                 horizon=None, kernel="auto"):
        self.n = n
        self.m = m
        self.s = s
        self.scheme = scheme
        self.oracle = oracle
        self.horizon = horizon
        self.kernel = kernel

    def fit(self, X=None, y=None):
        self.config_ = WalkConfig(self.n, self.m, self.s, self.scheme, self.oracle)
        self.horizon_ = self.horizon if self.horizon is not None else self.config_.default_horizon()
        if X is not None:
            check_marked_sets(X, self.n)
        return self

    def walk(self, marked) -> WalkResult:
        check_is_fitted(self, "config_")
        (ms,) = check_marked_sets([marked], self.n)
        return run_walk(self.config_, ms, self.horizon_, kernel=self.kernel)

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "config_")
        sets = check_marked_sets(X, self.n)
        self.results_ = [run_walk(self.config_, ms, self.horizon_, kernel=self.kernel) for ms in sets]
        return np.array([[r.peak_probability, r.peak_step, r.first_peak_step] for r in self.results_],
                        dtype=float)

    def score(self, X, y=None) -> float:
        return float(np.mean(self.transform(X)[:, 0]))

    def _more_tags(self):
        return {"stateless": True, "requires_y": False}

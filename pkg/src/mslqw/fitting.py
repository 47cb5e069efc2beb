"""Runtime-model fits of steps-to-peak against Hilbert-space size.

Two three-parameter models are supported::

    sqrt:  t = c1 * sqrt(x ** c2) + c3
    log:   t = c1 * log(x + c2) + c3          with x = (n + m) * N

Both are linear in (c1, c3) once c2 is fixed, so c2 is searched by
Nelder-Mead over the profiled residual, seeded from a coarse grid, and
(c1, c3) come from an exact linear least-squares solve at each trial c2.
The log model's c2 is searched through ``u = log(min(x) + c2)`` so every
trial point stays inside the domain ``x + c2 > 0``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, check_X_y, check_array


class FitPreconditionError(ValueError):
    pass


class FitError(RuntimeError):
    """Simplex search hit its iteration cap; ``best`` holds the last iterate."""

    def __init__(self, message: str, best: "FitResult"):
        super().__init__(message)
        self.best = best


@dataclass
class FitResult:
    model: str
    c1: float
    c2: float
    c3: float
    r_squared: float
    residuals: list[float]
    converged: bool = True
    degenerate: bool = False
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True) + "\n"


def sqrt_model(x, c1, c2, c3):
    return c1 * np.sqrt(np.asarray(x, dtype=float) ** c2) + c3


def log_model(x, c1, c2, c3):
    return c1 * np.log(np.asarray(x, dtype=float) + c2) + c3


def r_squared(y, y_fit) -> float:
    y = np.asarray(y, dtype=float)
    ss_res = float(np.sum((y - y_fit) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res <= 1e-24 * max(1.0, float(np.sum(y ** 2))) else -math.inf
    return 1.0 - ss_res / ss_tot


def _linear_part(f: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least-squares (c1, c3) for y ~ c1 * f + c3; returns (c1, c3, ssr)."""
    fc = f - f.mean()
    denom = float(fc @ fc)
    if denom == 0.0 or not np.isfinite(denom):
        c1 = 0.0
    else:
        c1 = float(fc @ (y - y.mean())) / denom
    c3 = float(y.mean() - c1 * f.mean())
    r = y - (c1 * f + c3)
    return c1, c3, float(r @ r)


def _check_points(x, y, min_points=4):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise FitPreconditionError("x and t must be 1-D and of equal length")
    if x.size < min_points:
        raise FitPreconditionError(f"need at least {min_points} points, got {x.size}")
    if np.unique(x).size < 3:
        raise FitPreconditionError("need at least 3 distinct x values for a 3-parameter model")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise FitPreconditionError("non-finite input")
    if np.any(x <= 0):
        raise FitPreconditionError("sizes must be positive")
    return x, y


def _profile_search(ssr: Callable[[float], float], grid: np.ndarray, max_iter: int, floor: float = 0.0):
    # ``floor`` is an absolute SSR tolerance; without it an exact grid hit (SSR at
    # rounding level) leaves the simplex chasing noise until the iteration cap
    values = np.array([ssr(g) for g in grid])
    start = float(grid[int(np.nanargmin(values))])
    span = float(np.max(np.diff(grid))) if grid.size > 1 else 1.0
    f_start = float(np.nanmin(values))
    res = minimize(lambda p: ssr(float(p[0])), x0=[start], method="Nelder-Mead",
                   options={"xatol": 1e-13 * max(1.0, abs(start)), "fatol": max(1e-14 * f_start, floor),
                            "maxiter": max_iter, "initial_simplex": [[start], [start + 0.5 * span]]})
    best = float(res.x[0])
    if ssr(best) > ssr(start):
        best = start
    return best, bool(res.success or res.nit < max_iter)


def fit_sqrt(x, y, *, c2_grid: Sequence[float] | None = None, max_iter: int = 5000) -> FitResult:
    x, y = _check_points(x, y)
    notes: list[str] = []
    if np.ptp(y) == 0:
        return FitResult("sqrt", 0.0, 1.0, float(y[0]), 1.0, [0.0] * x.size,
                         degenerate=True, notes=["constant t: c1 = 0, c2 arbitrary"])
    grid = np.linspace(0.5, 1.5, 21) if c2_grid is None else np.asarray(c2_grid, dtype=float)
    # scale x so x**c2 stays well conditioned for large exponents
    xs = x / x.max()

    def ssr(e):
        f = np.sqrt(xs ** e)
        return _linear_part(f, y)[2]

    c2, converged = _profile_search(ssr, grid, max_iter, 1e-24 * float(y @ y))
    f = np.sqrt(xs ** c2)
    c1s, c3, _ = _linear_part(f, y)
    c1 = c1s / math.sqrt(x.max() ** c2)
    fitted = sqrt_model(x, c1, c2, c3)
    degenerate = abs(c1s) < 1e-12 * max(1.0, float(np.abs(y).max()))
    if degenerate:
        notes.append("c1 ~ 0: data carry no size dependence")
    result = FitResult("sqrt", c1, c2, c3, r_squared(y, fitted), (y - fitted).tolist(),
                       converged, degenerate, notes)
    if not converged:
        raise FitError("sqrt-model simplex search did not converge", result)
    return result


def fit_log(x, y, *, u_grid: Sequence[float] | None = None, max_iter: int = 5000) -> FitResult:
    x, y = _check_points(x, y)
    notes = ["c2 searched as log(min(x) + c2) to keep x + c2 > 0"]
    if np.ptp(y) == 0:
        return FitResult("log", 0.0, 0.0, float(y[0]), 1.0, [0.0] * x.size,
                         degenerate=True, notes=["constant t: c1 = 0, c2 arbitrary"])
    x0 = float(x.min())
    if u_grid is None:
        # offsets from 1e-6 to 1e4 times the smallest size, log-spaced
        u_grid = np.log(x0) + np.linspace(math.log(1e-6), math.log(1e4), 121)
    grid = np.asarray(u_grid, dtype=float)

    def basis(u):
        # log(x + c2) with c2 = exp(u) - x0, written as u + log1p((x - x0) / exp(u))
        return u + np.log1p((x - x0) * math.exp(-u))

    def ssr(u):
        # outside a generous window around the grid the basis under/overflows
        if not np.isfinite(u) or u > 700 or u < grid.min() - 50:
            return math.inf
        return _linear_part(basis(u), y)[2]

    u, converged = _profile_search(ssr, grid, max_iter, 1e-24 * float(y @ y))
    c1, c3, _ = _linear_part(basis(u), y)
    c2 = math.exp(u) - x0
    fitted = c1 * basis(u) + c3
    degenerate = abs(c1) < 1e-12 * max(1.0, float(np.abs(y).max()))
    if u >= grid.max() - 1e-9:
        notes.append("offset at upper search bound: data are close to linear in x")
    if x0 + c2 <= 0:
        notes.append("x + c2 underflows at the smallest x: the fit is singular there")
    if degenerate:
        notes.append("c1 ~ 0: data carry no size dependence")
    result = FitResult("log", c1, c2, c3, r_squared(y, fitted), (y - fitted).tolist(),
                       converged, degenerate, notes)
    if not converged:
        raise FitError("log-model simplex search did not converge", result)
    return result


def fit_sqrt_model(points: Sequence[tuple[float, float]]) -> FitResult:
    """Fit ``t = c1*sqrt(x**c2) + c3`` to ``(x, t)`` pairs with ``x = (n+m)*N``."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    return fit_sqrt(pts[:, 0], pts[:, 1])


def fit_log_model(points: Sequence[tuple[float, float]], n: int) -> FitResult:
    """Fit ``t = c1*log((n+m)*N + c2) + c3`` to ``(m, t)`` pairs on the ``n``-cube."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    x = (n + pts[:, 0]) * float(1 << n)
    return fit_log(x, pts[:, 1])


def fit_csv(result: FitResult, x, t) -> str:
    x = np.asarray(x, dtype=float)
    fn = sqrt_model if result.model == "sqrt" else log_model
    t_fit = fn(x, result.c1, result.c2, result.c3)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "t", "t_fit"])
    for xi, ti, fi in zip(x.tolist(), np.asarray(t, dtype=float).tolist(), t_fit.tolist()):
        w.writerow([repr(xi), repr(ti), repr(fi)])
    return buf.getvalue()


class _RuntimeModel(RegressorMixin, BaseEstimator):
    _fit_fn: Callable = None
    _model_fn: Callable = None

    def fit(self, X, y):
        X, y = check_X_y(X, y, ensure_min_samples=4, y_numeric=True)
        if X.shape[1] != 1:
            raise ValueError("runtime models take a single feature: the size (n+m)*N")
        self.fit_result_ = self._fit(X[:, 0], y)
        self.c1_, self.c2_, self.c3_ = self.fit_result_.c1, self.fit_result_.c2, self.fit_result_.c3
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "fit_result_")
        X = check_array(X)
        return type(self)._model_fn(X[:, 0], self.c1_, self.c2_, self.c3_)


class SqrtRuntimeModel(_RuntimeModel):
    """Estimator for ``t = c1*sqrt(x**c2) + c3``.

    Parameters
    ----------
    c2_grid : sequence of float, optional
        Exponents tried before the simplex refinement; default 21 points on [0.5, 1.5].
    max_iter : int
        Simplex iteration cap.
    """

    _model_fn = staticmethod(sqrt_model)

    def __init__(self, c2_grid=None, max_iter=5000):
        self.c2_grid = c2_grid
        self.max_iter = max_iter

    def _fit(self, x, y):
        return fit_sqrt(x, y, c2_grid=self.c2_grid, max_iter=self.max_iter)


class LogRuntimeModel(_RuntimeModel):
    """Estimator for ``t = c1*log(x + c2) + c3``."""

    _model_fn = staticmethod(log_model)

    def __init__(self, u_grid=None, max_iter=5000):
        self.u_grid = u_grid
        self.max_iter = max_iter

    def _fit(self, x, y):
        return fit_log(x, y, u_grid=self.u_grid, max_iter=self.max_iter)

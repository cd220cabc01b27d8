"""In-repo supervised learners and cross-fitting for the nuisance functions.

Learners: OLS (minimum-norm least squares), LASSO via cyclic coordinate
descent on standardized columns with an unpenalized intercept, and the
bootstrap CART forest from ``forest.py``. ``stack`` solves the
simplex-constrained least-squares weighting exactly; ``cross_fit`` produces
out-of-fold nuisance predictions m0, m1, e_x, r_z.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .forest import forest_fit


class EstimationError(Exception):
    """An estimator could not produce a valid result."""


class ConvergenceError(EstimationError):
    """Coordinate descent hit max_iter; carries the last iterate as .model."""

    def __init__(self, message: str, model: "LinearModel"):
        super().__init__(message)
        self.model = model


@dataclass(frozen=True)
class DesignMatrix:
    """Feature matrix with column names and per-column standardization stats."""

    X: np.ndarray  # (n, p) float64, all finite
    columns: tuple[str, ...]
    mean: np.ndarray  # per-column mean
    sd: np.ndarray  # per-column sd (ddof=0); constant columns keep sd=0

    @classmethod
    def build(cls, X: np.ndarray, columns: tuple[str, ...]) -> "DesignMatrix":
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(columns):
            raise ValueError("X shape does not match column names")
        if not np.all(np.isfinite(X)):
            raise ValueError("design matrix contains non-finite entries")
        return cls(X=X, columns=tuple(columns), mean=X.mean(axis=0), sd=X.std(axis=0))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


def _as_array(X) -> np.ndarray:
    if isinstance(X, DesignMatrix):
        return X.X
    return np.asarray(X, dtype=np.float64)


@dataclass(frozen=True)
class LinearModel:
    """Intercept + coefficients on the original (unstandardized) scale."""

    intercept: float
    coef: np.ndarray
    n_iter: int = 0

    def predict(self, X) -> np.ndarray:
        return self.intercept + _as_array(X) @ self.coef


def ols_fit(X, y) -> LinearModel:
    """Least squares with intercept; minimum-norm solution when rank-deficient."""
    Xa = _as_array(X)
    y = np.asarray(y, dtype=np.float64)
    if Xa.shape[0] < 2:
        raise ValueError("ols_fit needs at least 2 rows")
    A = np.column_stack([np.ones(Xa.shape[0]), Xa])
    beta, *_ = np.linalg.lstsq(A, y, rcond=None)
    return LinearModel(intercept=float(beta[0]), coef=beta[1:])


def _soft_threshold(value: float, threshold: float) -> float:
    return math.copysign(max(abs(value) - threshold, 0.0), value)


def lasso_lambda_max(X, y) -> float:
    """Smallest penalty that zeroes every slope: max |X̃'ỹ| / n on standardized columns."""
    Xa = _as_array(X)
    y = np.asarray(y, dtype=np.float64)
    n = Xa.shape[0]
    yc = y - y.mean()
    sd = Xa.std(axis=0)
    keep = sd > 0
    if not np.any(keep):
        return 0.0
    Xs = (Xa[:, keep] - Xa[:, keep].mean(axis=0)) / sd[keep]
    return float(np.max(np.abs(Xs.T @ yc)) / n)


def default_lambda_grid(lambda_max: float, size: int = 50, ratio: float = 1e-4) -> np.ndarray:
    """Log-spaced grid from lambda_max down to lambda_max*ratio."""
    if lambda_max <= 0:
        return np.zeros(1)
    return np.geomspace(lambda_max, lambda_max * ratio, size)


def lasso_fit(
    X,
    y,
    lam: float,
    tol: float = 1e-8,
    max_iter: int = 1000,
    objective_trace: list | None = None,
    warm: LinearModel | None = None,
) -> LinearModel:
    """Cyclic coordinate descent for (1/2n)·RSS + λ·Σ|β_j| with free intercept.

    Columns are centered and scaled to unit sd internally; returned
    coefficients are on the original scale. Convergence: max absolute
    coefficient change (standardized scale) within a sweep < tol.

    Parameters
    ----------
    objective_trace : list, optional
        If given, the penalized objective is appended after every sweep.
    warm : LinearModel, optional
        Start from this model's coefficients instead of zero. Cuts sweep
        counts drastically when walking a λ grid from large to small.

    Raises
    ------
    ConvergenceError
        After max_iter sweeps without convergence; carries the last iterate.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    Xa = _as_array(X)
    y = np.asarray(y, dtype=np.float64)
    n, p = Xa.shape
    if n < 2:
        raise ValueError("lasso_fit needs at least 2 rows")
    mean = Xa.mean(axis=0)
    sd = Xa.std(axis=0)
    active = np.flatnonzero(sd > 0)
    ybar = y.mean()
    yc = y - ybar
    Xs = np.zeros_like(Xa)
    Xs[:, active] = (Xa[:, active] - mean[active]) / sd[active]
    # columns have exactly unit second moment after scaling, up to float error
    col_sq = np.ones(p)
    for j in active:
        col_sq[j] = float(Xs[:, j] @ Xs[:, j]) / n

    beta = np.zeros(p)
    if warm is not None and warm.coef.shape == (p,):
        beta[active] = warm.coef[active] * sd[active]
    resid = yc - Xs @ beta if beta.any() else yc.copy()
    n_iter = 0
    converged = False
    for sweep in range(max_iter):
        n_iter = sweep + 1
        max_delta = 0.0
        for j in active:
            bj = beta[j]
            rho = float(Xs[:, j] @ resid) / n + col_sq[j] * bj
            new = _soft_threshold(rho, lam) / col_sq[j]
            if new != bj:
                resid -= Xs[:, j] * (new - bj)
                beta[j] = new
                delta = abs(new - bj)
                if delta > max_delta:
                    max_delta = delta
        if objective_trace is not None:
            objective_trace.append(
                float(resid @ resid) / (2 * n) + lam * float(np.abs(beta).sum())
            )
        if max_delta < tol:
            converged = True
            break

    coef = np.zeros(p)
    coef[active] = beta[active] / sd[active]
    model = LinearModel(
        intercept=float(ybar - coef @ mean), coef=coef, n_iter=n_iter
    )
    if not converged:
        raise ConvergenceError(
            f"lasso did not converge in {max_iter} sweeps (lambda={lam})", model
        )
    return model


def lasso_path_fit(
    X,
    y,
    lam: float,
    tol: float = 1e-8,
    max_iter: int = 1000,
    grid: np.ndarray | None = None,
) -> LinearModel:
    """lasso_fit at ``lam``, reached by warm starts down a descending grid.

    Same solution as a cold fit within tolerance, far fewer sweeps at
    small λ. Grid values at or below ``lam`` are skipped.
    """
    if grid is None:
        grid = default_lambda_grid(lasso_lambda_max(X, y))
    model = None
    path_tol = max(tol, 1e-8)
    for step in sorted((float(g) for g in np.asarray(grid) if g > lam), reverse=True):
        model = lasso_fit(X, y, step, tol=path_tol, max_iter=max_iter, warm=model)
    return lasso_fit(X, y, lam, tol=tol, max_iter=max_iter, warm=model)


def lasso_cv(
    X,
    y,
    grid: np.ndarray | None = None,
    folds: int = 5,
    seed: int = 0,
    tol: float = 1e-7,
    max_iter: int = 2000,
) -> tuple[float, np.ndarray]:
    """Pick λ from ``grid`` by K-fold CV mean squared error.

    Folds come from a seeded shuffle; the grid is walked from large to small λ.
    Ties in CV error resolve to the larger (more parsimonious) λ.
    Returns (best_lambda, per-lambda mean CV MSE).
    """
    Xa = _as_array(X)
    y = np.asarray(y, dtype=np.float64)
    n = Xa.shape[0]
    if grid is None:
        grid = default_lambda_grid(lasso_lambda_max(Xa, y))
    grid = np.asarray(grid, dtype=np.float64)
    if grid.size == 0:
        raise ValueError("empty lambda grid")
    order = np.argsort(grid)[::-1]  # descending
    rng = np.random.default_rng([seed, 977])
    fold_id = rng.permutation(n) % folds
    sse = np.zeros(grid.size)
    for f in range(folds):
        test = fold_id == f
        train = ~test
        model = None
        for idx in order:
            model = lasso_fit(Xa[train], y[train], float(grid[idx]), tol=tol,
                              max_iter=max_iter, warm=model)
            err = y[test] - model.predict(Xa[test])
            sse[idx] += float(err @ err)
    mse = sse / n
    # argmin with ties to the largest lambda
    best = min(range(grid.size), key=lambda i: (mse[i], -grid[i]))
    return float(grid[best]), mse


def stack(preds: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Simplex-constrained least squares: min ||target − preds·w||², w ≥ 0, Σw = 1.

    Solved exactly by enumerating active sets (equality-constrained KKT solve
    per support, feasible candidates compared by loss). Ties go to the larger
    support with the minimum-norm KKT solution, so identical learners receive
    equal weights.
    """
    P = np.asarray(preds, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if P.ndim != 2 or P.shape[1] < 2:
        raise ValueError("stack needs cross-fitted predictions from >= 2 learners")
    n, L = P.shape
    if L > 12:
        raise ValueError("stack supports at most 12 learners")
    best_w = None
    best_loss = math.inf
    for size in range(L, 0, -1):
        for support in itertools.combinations(range(L), size):
            S = list(support)
            G = P[:, S].T @ P[:, S]
            kkt = np.zeros((size + 1, size + 1))
            kkt[:size, :size] = G
            kkt[:size, size] = 1.0
            kkt[size, :size] = 1.0
            rhs = np.concatenate([P[:, S].T @ t, [1.0]])
            sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
            w_s = sol[:size]
            if np.min(w_s) < -1e-10 or abs(w_s.sum() - 1.0) > 1e-8:
                continue
            fitted = P[:, S] @ w_s
            loss = float(np.sum((t - fitted) ** 2))
            if loss < best_loss - 1e-12:
                best_loss = loss
                w = np.zeros(L)
                w[S] = w_s
                best_w = w
    if best_w is None:  # cannot happen for finite inputs; guard anyway
        best_w = np.full(L, 1.0 / L)
    best_w = np.clip(best_w, 0.0, None)
    best_w /= best_w.sum()
    return best_w


@dataclass(frozen=True)
class LearnerConfig:
    """Hyperparameters for the nuisance learners and stacking."""

    learners: tuple[str, ...] = ("ols", "lasso", "forest")
    trees: int = 200
    max_depth: int | None = None
    min_leaf: int = 20
    mtry: int | None = None
    lasso_lambda_ratio: float | None = None  # None -> internal CV over the grid
    lasso_grid_size: int = 10
    lasso_grid_ratio: float = 1e-4
    lasso_cv_folds: int = 3
    lasso_tol: float = 1e-7
    lasso_max_iter: int = 2000
    inner_folds: int = 2
    threads: int = 1

    def validate(self) -> None:
        known = {"ols", "lasso", "forest"}
        if not self.learners or any(name not in known for name in self.learners):
            raise ValueError(f"learners must be a nonempty subset of {sorted(known)}")
        if self.inner_folds < 2:
            raise ValueError("inner_folds must be >= 2")


@dataclass
class NuisanceFits:
    """Cross-fitted nuisance predictions; every entry is out-of-fold."""

    m0: np.ndarray  # E[Y | D=0, X]
    m1: np.ndarray  # E[Y | D=1, X]
    e_x: np.ndarray  # f(D=1 | X), clipped
    r_z: np.ndarray  # f(D=1 | Z), clipped
    fold: np.ndarray  # fold id per sample
    clip_eps: float
    x_columns: tuple[str, ...] = ()
    stack_weights: dict = field(default_factory=dict)  # (nuisance, fold) -> weights

    @property
    def n(self) -> int:
        return self.fold.shape[0]

    def export_rows(self):
        """Per-sample diagnostics rows (fold, m0, m1, e_x, r_z)."""
        for i in range(self.n):
            yield (
                int(self.fold[i]), float(self.m0[i]), float(self.m1[i]),
                float(self.e_x[i]), float(self.r_z[i]),
            )


def _fit_single(name: str, X: np.ndarray, y: np.ndarray, cfg: LearnerConfig, seed_parts):
    if name == "ols":
        return ols_fit(X, y)
    if name == "lasso":
        lmax = lasso_lambda_max(X, y)
        grid = default_lambda_grid(lmax, cfg.lasso_grid_size, cfg.lasso_grid_ratio)
        if cfg.lasso_lambda_ratio is not None:
            lam = lmax * cfg.lasso_lambda_ratio
        else:
            lam, _ = lasso_cv(
                X, y, grid, folds=cfg.lasso_cv_folds,
                seed=_mix_seed(seed_parts), tol=cfg.lasso_tol,
                max_iter=cfg.lasso_max_iter,
            )
        return lasso_path_fit(X, y, lam, tol=cfg.lasso_tol,
                              max_iter=cfg.lasso_max_iter, grid=grid)
    if name == "forest":
        return forest_fit(
            X, y, trees=cfg.trees, max_depth=cfg.max_depth, min_leaf=cfg.min_leaf,
            mtry=cfg.mtry, seed=_mix_seed(seed_parts), threads=cfg.threads,
        )
    raise ValueError(f"unknown learner {name!r}")


def _mix_seed(parts) -> int:
    # stable scalar seed from a (seed, fold, learner, ...) tuple
    return int(np.random.SeedSequence(list(parts)).generate_state(1, np.uint64)[0] % (2**63))


def _fit_stacked(
    X: np.ndarray,
    target: np.ndarray,
    cfg: LearnerConfig,
    seed: int,
    fold: int,
    nuisance_code: int,
):
    """Train each learner on (X, target), weight them on an inner split.

    Returns (predict function, weights). With a single learner the weight is 1.
    """
    names = cfg.learners
    n = X.shape[0]
    models = [
        _fit_single(name, X, target, cfg, (seed, fold, nuisance_code, li, 0))
        for li, name in enumerate(names)
    ]
    if len(names) == 1:
        weights = np.ones(1)
    else:
        rng = np.random.default_rng([seed, fold, nuisance_code, 555])
        inner_id = rng.permutation(n) % cfg.inner_folds
        inner_preds = np.zeros((n, len(names)))
        for g in range(cfg.inner_folds):
            hold = inner_id == g
            rest = ~hold
            for li, name in enumerate(names):
                sub = _fit_single(
                    name, X[rest], target[rest], cfg, (seed, fold, nuisance_code, li, 1 + g)
                )
                inner_preds[hold, li] = sub.predict(X[hold])
        weights = stack(inner_preds, target)

    def predict(Xq: np.ndarray) -> np.ndarray:
        out = np.zeros(Xq.shape[0])
        for w, model in zip(weights, models):
            if w != 0.0:
                out += w * model.predict(Xq)
        return out

    return predict, weights


def make_folds(n: int, folds: int, seed: int) -> np.ndarray:
    """Seeded-shuffle fold assignment: permutation positions modulo fold count."""
    if folds < 2:
        raise ValueError("folds must be >= 2")
    rng = np.random.default_rng([seed, 101])
    fold_id = np.empty(n, dtype=np.int64)
    fold_id[rng.permutation(n)] = np.arange(n) % folds
    return fold_id


def cross_fit(
    X,
    y: np.ndarray,
    d: np.ndarray,
    z_groups: np.ndarray,
    folds: int = 5,
    seed: int = 0,
    config: LearnerConfig | None = None,
    clip_eps: float = 0.01,
    fold_id: np.ndarray | None = None,
) -> NuisanceFits:
    """Cross-fitted m0, m1, e_x (stacked learners) and r_z (group shares).

    For each fold the learners are trained on the complement (m0 on its D=0
    rows, m1 on its D=1 rows, e_x on all rows against the 0/1 label), stacked
    via an inner split of the complement, and predictions are emitted for the
    held-out fold only. Probabilities are clipped to [clip_eps, 1−clip_eps].

    ``fold_id`` lets callers share one assignment across covariate sets.
    """
    cfg = config or LearnerConfig()
    cfg.validate()
    columns: tuple[str, ...] = ()
    if isinstance(X, DesignMatrix):
        columns = X.columns
    Xa = _as_array(X)
    y = np.asarray(y, dtype=np.float64)
    d = np.asarray(d)
    z_groups = np.asarray(z_groups)
    n = Xa.shape[0]
    if fold_id is None:
        fold_id = make_folds(n, folds, seed)
    n_folds = int(fold_id.max()) + 1

    m0 = np.zeros(n)
    m1 = np.zeros(n)
    e_x = np.zeros(n)
    r_z = np.zeros(n)
    weights_audit: dict = {}

    d_bool = d.astype(bool)
    y64 = y.astype(np.float64)
    d64 = d.astype(np.float64)
    for f in range(n_folds):
        test = fold_id == f
        train = ~test
        train_m = train & ~d_bool
        train_f = train & d_bool
        if not np.any(train_m) or not np.any(train_f):
            raise EstimationError(
                f"fold {f}: complement has no rows for one gender; "
                "apply stronger trimming before cross-fitting"
            )
        pred_m0, w0 = _fit_stacked(Xa[train_m], y64[train_m], cfg, seed, f, 0)
        pred_m1, w1 = _fit_stacked(Xa[train_f], y64[train_f], cfg, seed, f, 1)
        pred_e, we = _fit_stacked(Xa[train], d64[train], cfg, seed, f, 2)
        m0[test] = pred_m0(Xa[test])
        m1[test] = pred_m1(Xa[test])
        e_x[test] = pred_e(Xa[test])
        weights_audit[("m0", f)] = tuple(float(v) for v in w0)
        weights_audit[("m1", f)] = tuple(float(v) for v in w1)
        weights_audit[("e_x", f)] = tuple(float(v) for v in we)

        # saturated dummy regression of D on Z = per-group female share
        fallback = float(d64[train].mean())
        groups_train = z_groups[train]
        dt = d64[train]
        uniq, inv = np.unique(groups_train, return_inverse=True)
        sums = np.bincount(inv, weights=dt)
        counts = np.bincount(inv)
        share = dict(zip(uniq.tolist(), (sums / counts).tolist()))
        r_z[test] = np.array(
            [share.get(g, fallback) for g in z_groups[test].tolist()]
        )

    e_x = np.clip(e_x, clip_eps, 1.0 - clip_eps)
    r_z = np.clip(r_z, clip_eps, 1.0 - clip_eps)
    return NuisanceFits(
        m0=m0, m1=m1, e_x=e_x, r_z=r_z, fold=fold_id, clip_eps=clip_eps,
        x_columns=columns, stack_weights=weights_audit,
    )

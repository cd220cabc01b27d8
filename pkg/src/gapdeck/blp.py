"""Best linear projections of the residual conditional gap over cell features.

The pseudo-outcome is built at the finest cell level from the cross-fitted
full-covariate nuisances, then projected onto coarse quintile-dummy designs
or the saturated cell design. Two modes:

counterfactual: what women would earn under the male outcome model, by cell
gap: the female cell mean minus that counterfactual
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cells import CellKey, CellTable, EmbeddedData
from .learners import EstimationError, NuisanceFits

DEFAULT_BLOCKS = ("age", "region", "occupation")


@dataclass
class BLPResult:
    mode: str
    weight_by: str
    saturated: bool
    columns: tuple[str, ...]
    coef: np.ndarray
    se: np.ndarray
    dropped: tuple[str, ...]
    n: int

    def as_dict(self) -> dict:
        return {
            name: {"estimate": float(b), "se": float(s)}
            for name, b, s in zip(self.columns, self.coef, self.se)
        }


@dataclass(frozen=True)
class CellGapRow:
    label: str
    n: int
    n_female: int
    female_share: float
    estimate: float
    se: float


def _group_mean(values: np.ndarray, groups: np.ndarray, weights: np.ndarray | None = None):
    w = np.ones(values.size) if weights is None else np.asarray(weights, dtype=float)
    denom = np.bincount(groups, weights=w)
    num = np.bincount(groups, weights=w * values)
    out = np.zeros_like(denom)
    ok = denom > 0
    out[ok] = num[ok] / denom[ok]
    return out


def eif_pseudo_outcome(
    y: np.ndarray,
    d: np.ndarray,
    m0: np.ndarray,
    e_x: np.ndarray,
    r_z: np.ndarray,
    groups: np.ndarray,
    clip_eps: float = 0.01,
) -> np.ndarray:
    """Per-row pseudo-outcome whose cell means target the cell counterfactual.

    The counterfactual is the male outcome model averaged over the female
    covariate mix of the cell. The correction ratio term uses the in-sample
    cell mean of m0*e, which zeroes the term's mean within every cell when
    r is the cell female share.
    """
    d = np.asarray(d, dtype=float)
    e = np.clip(e_x, clip_eps, 1.0 - clip_eps)
    r = np.clip(r_z, clip_eps, 1.0 - clip_eps)
    odds = e / (1.0 - e)
    g_hat = _group_mean(m0 * e, groups)[groups]
    return (
        d * m0 / r
        + (1.0 - d) * odds * (y - m0) / r
        - g_hat / r**2 * (d - r)
    )


def gap_pseudo_outcome(
    y: np.ndarray,
    d: np.ndarray,
    m0: np.ndarray,
    e_x: np.ndarray,
    r_z: np.ndarray,
    groups: np.ndarray,
    clip_eps: float = 0.01,
) -> np.ndarray:
    """Pseudo-outcome for the cell gap: female cell mean minus counterfactual."""
    d = np.asarray(d, dtype=float)
    r = np.clip(r_z, clip_eps, 1.0 - clip_eps)
    mu1 = _group_mean(y, groups, weights=d)[groups]
    psi = d * (y - mu1) / r + mu1
    return psi - eif_pseudo_outcome(y, d, m0, e_x, r_z, groups, clip_eps)


def drop_aliased(X: np.ndarray, columns: tuple[str, ...], tol: float = 1e-8):
    """Drop columns linearly dependent on earlier ones (Gram-Schmidt sweep)."""
    n = X.shape[0]
    basis: list[np.ndarray] = []
    keep: list[int] = []
    dropped: list[str] = []
    for j in range(X.shape[1]):
        c = X[:, j].astype(float)
        resid = c.copy()
        for q in basis:
            resid -= (q @ resid) * q
        norm = np.linalg.norm(resid)
        if norm > tol * max(np.linalg.norm(c), 1.0):
            basis.append(resid / norm)
            keep.append(j)
        else:
            dropped.append(columns[j])
    return X[:, keep], tuple(columns[j] for j in keep), tuple(dropped)


def build_z_design(
    table: CellTable,
    blocks: tuple[str, ...] = DEFAULT_BLOCKS,
    saturated: bool = False,
):
    """Design matrix over cell features for the kept (non-trimmed) rows.

    Dummy coding drops the first quintile for age and region and uses the
    no-stated-occupation group as the occupation baseline. The saturated
    design has one indicator per occupied kept cell and no intercept.
    """
    kept = ~table.trimmed_sample
    if saturated:
        ids = table.cell_id[kept]
        occupied = np.unique(ids)
        X = (ids[:, None] == occupied[None, :]).astype(float)
        columns = tuple(_cell_label(int(c)) for c in occupied)
        return X, columns
    cols: list[np.ndarray] = [np.ones(int(kept.sum()))]
    names: list[str] = ["intercept"]
    for block in blocks:
        if block == "age":
            vals, levels, stem = table.age_q[kept], range(2, 6), "age_q"
        elif block == "region":
            vals, levels, stem = table.region_q[kept], range(2, 6), "region_q"
        elif block == "occupation":
            vals, levels, stem = table.occ_q[kept], range(1, 6), "occ_q"
        else:
            raise ValueError(f"unknown design block {block!r}")
        for lev in levels:
            cols.append((vals == lev).astype(float))
            names.append(f"{stem}{lev}")
    return np.column_stack(cols), tuple(names)


def _cell_label(cell_id: int) -> str:
    return CellKey(
        age_q=cell_id // 30 + 1,
        region_q=cell_id % 30 // 6 + 1,
        occ_q=cell_id % 6,
    ).label()


def _wls_hc0(X: np.ndarray, t: np.ndarray, w: np.ndarray):
    sw = np.sqrt(w)
    beta, *_ = np.linalg.lstsq(X * sw[:, None], t * sw, rcond=None)
    u = t - X @ beta
    xtwx = (X * w[:, None]).T @ X
    xtwx_inv = np.linalg.pinv(xtwx)
    meat = (X * (w * w * u * u)[:, None]).T @ X
    cov = xtwx_inv @ meat @ xtwx_inv
    return beta, np.sqrt(np.clip(np.diag(cov), 0.0, None))


def blp(
    data: EmbeddedData,
    table: CellTable,
    fits: NuisanceFits,
    mode: str = "gap",
    blocks: tuple[str, ...] = DEFAULT_BLOCKS,
    saturated: bool = False,
    weight_by: str = "all",
    clip_eps: float = 0.01,
) -> BLPResult:
    """Weighted least squares of the pseudo-outcome on the cell design.

    fits must be the full-covariate cross-fitted nuisances aligned to the
    kept rows. Standard errors are HC0, treating the pseudo-outcome as
    known data.
    """
    if mode not in ("gap", "counterfactual"):
        raise ValueError(f"unknown blp mode {mode!r}")
    if weight_by not in ("all", "female"):
        raise ValueError(f"unknown blp weighting {weight_by!r}")
    kept = ~table.trimmed_sample
    y = data.y[kept]
    d = np.asarray(data.d[kept], dtype=float)
    groups = table.cell_id[kept]
    maker = gap_pseudo_outcome if mode == "gap" else eif_pseudo_outcome
    t = maker(y, d, fits.m0, fits.e_x, fits.r_z, groups, clip_eps)
    X, columns = build_z_design(table, blocks=blocks, saturated=saturated)
    X, columns, dropped = drop_aliased(X, columns)
    w = np.ones(y.size) if weight_by == "all" else d
    if w.sum() <= 0:
        raise EstimationError("blp weights sum to zero")
    beta, se = _wls_hc0(X, t, w)
    return BLPResult(
        mode=mode, weight_by=weight_by, saturated=saturated,
        columns=columns, coef=beta, se=se, dropped=dropped, n=int(y.size),
    )


def cell_heterogeneity(
    data: EmbeddedData,
    table: CellTable,
    fits: NuisanceFits,
    clip_eps: float = 0.01,
) -> list[CellGapRow]:
    """Saturated gap-mode projection: one gap estimate per kept cell."""
    res = blp(data, table, fits, mode="gap", saturated=True, clip_eps=clip_eps)
    kept = ~table.trimmed_sample
    groups = table.cell_id[kept]
    d = data.d[kept]
    label_to_idx = {label: i for i, label in enumerate(res.columns)}
    rows = []
    for cid in np.unique(groups):
        label = _cell_label(int(cid))
        in_cell = groups == cid
        i = label_to_idx[label]
        rows.append(
            CellGapRow(
                label=label,
                n=int(in_cell.sum()),
                n_female=int(d[in_cell].sum()),
                female_share=float(d[in_cell].mean()),
                estimate=float(res.coef[i]),
                se=float(res.se[i]),
            )
        )
    return rows

"""Doubly robust adjusted gaps and the sequential covariate decomposition.

Signs follow the stored convention: female mean minus male mean. The report
layer flips to male-minus-female when presenting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cells import CellTable, EmbeddedData
from .embedding import design_matrix
from .learners import (
    EstimationError,
    LearnerConfig,
    NuisanceFits,
    cross_fit,
    make_folds,
)

COVARIATE_SETS = ("x1", "x2", "x3", "x4")

# block whose addition turns set k-1 into set k
BLOCK_OF = {"x1": "month", "x2": "age", "x3": "region", "x4": "occupation"}


@dataclass(frozen=True)
class GapEstimate:
    estimate: float
    se: float


@dataclass
class DecompositionResult:
    raw_gap: GapEstimate
    raw_gap_untrimmed: GapEstimate
    phi: dict[str, GapEstimate]
    contributions: dict[str, GapEstimate]
    residual: GapEstimate
    n_used: int
    n_trimmed: int
    fits: dict[str, NuisanceFits]


def _se(psi: np.ndarray) -> float:
    return float(psi.std(ddof=1) / math.sqrt(psi.size))


def raw_gap(y: np.ndarray, d: np.ndarray) -> tuple[float, np.ndarray]:
    """Unadjusted mean difference and its influence values."""
    d = np.asarray(d, dtype=float)
    p = d.mean()
    if p <= 0.0 or p >= 1.0:
        raise EstimationError("raw gap needs both genders present")
    y1 = y[d == 1].mean()
    y0 = y[d == 0].mean()
    psi = d * (y - y1) / p - (1.0 - d) * (y - y0) / (1.0 - p)
    return float(y1 - y0), psi


def adjusted_gap(
    y: np.ndarray,
    d: np.ndarray,
    m0: np.ndarray,
    e_x: np.ndarray,
    clip_eps: float = 0.01,
) -> tuple[float, np.ndarray]:
    """AIPW adjusted gap: female mean minus reweighted male outcome model.

    Returns the estimate and per-row influence values; the standard error
    is std(psi)/sqrt(n). Doubly robust: exact if either m0 or e_x is exact.
    """
    d = np.asarray(d, dtype=float)
    p = d.mean()
    if p <= 0.0 or p >= 1.0:
        raise EstimationError("adjusted gap needs both genders present")
    e = np.clip(e_x, clip_eps, 1.0 - clip_eps)
    odds = e / (1.0 - e)
    resid = y - m0
    contrib = d * resid - (1.0 - d) * odds * resid
    phi = float(contrib.mean() / p)
    psi = (contrib - d * phi) / p
    return phi, psi


def decompose(
    data: EmbeddedData,
    table: CellTable,
    config: LearnerConfig | None = None,
    folds: int = 5,
    seed: int = 0,
    clip_eps: float = 0.01,
    covariate_sets: tuple[str, ...] = COVARIATE_SETS,
) -> DecompositionResult:
    """Sequential decomposition over nested covariate sets.

    Trimmed rows are excluded everywhere except raw_gap_untrimmed. All
    covariate sets share one cross-fitting fold assignment so contribution
    influence values difference cleanly.
    """
    raw_u_est, raw_u_psi = raw_gap(data.y, data.d)
    kept = ~table.trimmed_sample
    y = data.y[kept]
    d = data.d[kept]
    z = table.cell_id[kept]
    raw_est, raw_psi = raw_gap(y, d)
    fold_id = make_folds(y.size, folds, seed)

    fits: dict[str, NuisanceFits] = {}
    phi: dict[str, GapEstimate] = {}
    psi: dict[str, np.ndarray] = {}
    for cs in covariate_sets:
        dm = design_matrix(data, cs)
        f = cross_fit(
            dm.X[kept], y, d, z,
            folds=folds, seed=seed, config=config,
            clip_eps=clip_eps, fold_id=fold_id,
        )
        est, infl = adjusted_gap(y, d, f.m0, f.e_x, clip_eps)
        fits[cs] = f
        phi[cs] = GapEstimate(est, _se(infl))
        psi[cs] = infl

    contributions: dict[str, GapEstimate] = {}
    prev_est, prev_psi = raw_est, raw_psi
    for cs in covariate_sets:
        contributions[BLOCK_OF[cs]] = GapEstimate(
            prev_est - phi[cs].estimate, _se(prev_psi - psi[cs])
        )
        prev_est, prev_psi = phi[cs].estimate, psi[cs]

    return DecompositionResult(
        raw_gap=GapEstimate(raw_est, _se(raw_psi)),
        raw_gap_untrimmed=GapEstimate(raw_u_est, _se(raw_u_psi)),
        phi=phi,
        contributions=contributions,
        residual=phi[covariate_sets[-1]],
        n_used=int(y.size),
        n_trimmed=int(np.count_nonzero(table.trimmed_sample)),
        fits=fits,
    )


def subgroup_decompose(
    data: EmbeddedData,
    table: CellTable,
    fits: NuisanceFits,
    occupations: set[str | None] | None = None,
    clip_eps: float = 0.01,
) -> GapEstimate:
    """Adjusted gap restricted to an occupation subgroup.

    Reuses the cross-fitted full-covariate nuisances; with occupations=None
    this reproduces the decomposition residual exactly. None inside the set
    selects seekers with no stated occupation.
    """
    kept = ~table.trimmed_sample
    y = data.y[kept]
    d = data.d[kept]
    if occupations is None:
        sel = np.ones(y.size, dtype=bool)
    else:
        occ = data.occupation[kept]
        missing = data.occ_missing[kept] == 1
        sel = np.zeros(y.size, dtype=bool)
        for name in occupations:
            if name is None:
                sel |= missing
            else:
                sel |= occ == name
    if not sel.any():
        raise EstimationError("occupation subgroup matched no rows")
    est, psi = adjusted_gap(y[sel], d[sel], fits.m0[sel], fits.e_x[sel], clip_eps)
    return GapEstimate(est, _se(psi))

"""Quintile grouping into 150 cells, subgroup statistics, positivity trimming.

Cells are age quintile (1-5) x prefecture-wage quintile (1-5) x occupation
group (wage quintile 1-5 plus 0 for missing occupation). A cell is trimmed
when its female share falls below the threshold (default 0.001, the
male-ratio > 99.9% rule).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .embedding import CategoryEmbedding, EmbeddedData

OCC_UNKNOWN = 0  # occ_q code for seekers without a desired occupation
N_CELLS = 150


@dataclass(frozen=True, order=True)
class CellKey:
    age_q: int  # 1..5
    region_q: int  # 1..5
    occ_q: int  # 1..5, or 0 = Unknown

    def label(self) -> str:
        occ = "Unknown" if self.occ_q == OCC_UNKNOWN else str(self.occ_q)
        return f"age{self.age_q}-region{self.region_q}-occ{occ}"


@dataclass
class CellStats:
    n_male: int
    n_female: int
    mean_y_male: float  # nan when no males
    mean_y_female: float
    trimmed: bool

    @property
    def female_share(self) -> float:
        total = self.n_male + self.n_female
        return self.n_female / total if total else 0.0


@dataclass(frozen=True)
class QuantileBins:
    """Bin edges at the empirical i/k quantiles plus per-value assignment."""

    edges: np.ndarray  # k-1 interior edges
    assignment: np.ndarray  # values in 1..k
    degenerate: bool = False


def quantile_bins(values, k: int) -> QuantileBins:
    """Empirical quantile binning; ties go to the lowest admissible bin.

    Edge i (i=1..k-1) is the sorted value at position ceil(n*i/k); a value
    lands in bin 1 + #(edges strictly below it). Distinct values with n
    divisible by k give exactly equal bins.
    """
    vals = np.asarray(values, dtype=np.float64)
    n = vals.shape[0]
    if n == 0:
        raise ValueError("quantile_bins needs nonempty values")
    if k < 2:
        raise ValueError("quantile_bins needs k >= 2")
    srt = np.sort(vals)
    if srt[0] == srt[-1]:
        warnings.warn("all values identical; quantile binning is degenerate")
        return QuantileBins(
            edges=np.empty(0), assignment=np.ones(n, dtype=np.int64), degenerate=True
        )
    positions = [math.ceil(n * i / k) - 1 for i in range(1, k)]
    edges = srt[positions]
    assignment = 1 + np.searchsorted(edges, vals, side="left")
    return QuantileBins(edges=edges, assignment=assignment.astype(np.int64))


def assign_bins(values, edges: np.ndarray) -> np.ndarray:
    """Apply previously computed edges to new values (same tie rule)."""
    vals = np.asarray(values, dtype=np.float64)
    if edges.size == 0:
        return np.ones(vals.shape[0], dtype=np.int64)
    return (1 + np.searchsorted(edges, vals, side="left")).astype(np.int64)


@dataclass
class CellTable:
    """Per-sample cell assignment plus per-cell statistics for all 150 keys."""

    stats: dict  # CellKey -> CellStats
    age_q: np.ndarray
    region_q: np.ndarray
    occ_q: np.ndarray
    cell_id: np.ndarray  # dense 0..149 code per sample
    trimmed_sample: np.ndarray  # bool per sample
    age_edges: np.ndarray
    region_edges: np.ndarray
    occ_edges: np.ndarray
    trim_threshold: float

    @property
    def n_trimmed_cells(self) -> int:
        return sum(1 for s in self.stats.values() if s.trimmed)

    def key_of(self, i: int) -> CellKey:
        return CellKey(int(self.age_q[i]), int(self.region_q[i]), int(self.occ_q[i]))


def _cell_id(age_q: np.ndarray, region_q: np.ndarray, occ_q: np.ndarray) -> np.ndarray:
    # dense code: ((age-1)*5 + (region-1))*6 + occ
    return ((age_q - 1) * 5 + (region_q - 1)) * 6 + occ_q


def all_cell_keys() -> list[CellKey]:
    return [
        CellKey(a, r, o)
        for a in range(1, 6)
        for r in range(1, 6)
        for o in range(0, 6)
    ]


def build_cells(
    data: EmbeddedData,
    region_emb: CategoryEmbedding,
    occ_emb: CategoryEmbedding,
    trim_threshold: float = 0.001,
) -> CellTable:
    """Assign every sample to one of the 150 cells and compute cell stats.

    Age quintiles come from the pooled seeker ages; prefecture and
    occupation quintiles cut the per-seeker predicted category wage, so
    each seeker counts once toward their category's mass. Missing
    occupation maps to the Unknown group. Empty cells are reported with
    zero counts and count as trimmed.
    """
    age_bins = quantile_bins(data.age, 5)
    region_bins = quantile_bins(data.region_embed[:, 0], 5)
    known = data.occ_missing == 0
    if np.any(known):
        occ_bins = quantile_bins(data.occ_embed[known, 0], 5)
        occ_edges = occ_bins.edges
    else:
        occ_edges = np.empty(0)
    occ_q = np.zeros(data.n, dtype=np.int64)
    if np.any(known):
        occ_q[known] = assign_bins(data.occ_embed[known, 0], occ_edges)

    age_q = age_bins.assignment
    region_q = region_bins.assignment
    cell_id = _cell_id(age_q, region_q, occ_q)

    female = data.d == 1
    n_f = np.bincount(cell_id[female], minlength=N_CELLS)
    n_m = np.bincount(cell_id[~female], minlength=N_CELLS)
    sum_f = np.bincount(cell_id[female], weights=data.y[female], minlength=N_CELLS)
    sum_m = np.bincount(cell_id[~female], weights=data.y[~female], minlength=N_CELLS)

    stats: dict[CellKey, CellStats] = {}
    trimmed_by_id = np.zeros(N_CELLS, dtype=bool)
    for key in all_cell_keys():
        cid = _cell_id(
            np.array([key.age_q]), np.array([key.region_q]), np.array([key.occ_q])
        )[0]
        males = int(n_m[cid])
        females = int(n_f[cid])
        total = males + females
        share = females / total if total else 0.0
        trimmed = share < trim_threshold
        trimmed_by_id[cid] = trimmed
        stats[key] = CellStats(
            n_male=males,
            n_female=females,
            mean_y_male=sum_m[cid] / males if males else float("nan"),
            mean_y_female=sum_f[cid] / females if females else float("nan"),
            trimmed=trimmed,
        )
    return CellTable(
        stats=stats, age_q=age_q, region_q=region_q, occ_q=occ_q,
        cell_id=cell_id, trimmed_sample=trimmed_by_id[cell_id],
        age_edges=age_bins.edges, region_edges=region_bins.edges,
        occ_edges=occ_edges, trim_threshold=trim_threshold,
    )


def figure_data(table: CellTable) -> list[dict]:
    """Rows for the subgroup-mean and female-ratio figures.

    Wages are reported in 1,000-yen units (exp of the mean log wage / 1000)
    so they read in the same units as the input desired_wage column.
    """
    rows = []
    for key in sorted(table.stats):
        s = table.stats[key]
        rows.append(
            {
                "age_q": key.age_q,
                "region_q": key.region_q,
                "occ_q": "Unknown" if key.occ_q == OCC_UNKNOWN else key.occ_q,
                "n_male": s.n_male,
                "n_female": s.n_female,
                "female_share": s.female_share,
                "mean_wage_male": (
                    math.exp(s.mean_y_male) / 1000.0 if s.n_male else float("nan")
                ),
                "mean_wage_female": (
                    math.exp(s.mean_y_female) / 1000.0 if s.n_female else float("nan")
                ),
                "trimmed": s.trimmed,
            }
        )
    return rows

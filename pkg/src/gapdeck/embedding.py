"""Two-dimensional category embeddings and covariate assembly.

Each high-cardinality categorical (desired prefecture, desired occupation)
is replaced by (predicted log offered lower wage, mean seeker age). The
prefecture wage dimension is a per-prefecture mean; the occupation wage
dimension comes from a cross-validated LASSO on one-hot occupation
indicators. Missing or unseen categories take the medians over observed
categories, with a 0/1 missing dummy for absent occupation.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import PostingRecord, SeekerRecord, outcome
from .learners import (
    DesignMatrix,
    default_lambda_grid,
    lasso_cv,
    lasso_lambda_max,
    lasso_path_fit,
)

COVARIATE_SETS = ("x1", "x2", "x3", "x4")


@dataclass(frozen=True)
class CategoryEmbedding:
    """category -> (pred_wage, mean_age), plus medians for substitution."""

    kind: str  # "region" or "occupation"
    pred_wage: dict
    mean_age: dict
    median_pred_wage: float
    median_mean_age: float
    unmatched: tuple = ()  # categories that needed median substitution at fit

    def lookup(self, category) -> tuple[float, float, bool]:
        """Return (pred_wage, mean_age, seen). Unseen dims take medians."""
        seen = category in self.pred_wage or category in self.mean_age
        wage = self.pred_wage.get(category, self.median_pred_wage)
        age = self.mean_age.get(category, self.median_mean_age)
        return wage, age, seen


@dataclass(frozen=True)
class EmbeddedSample:
    """One seeker after embedding; view into EmbeddedData."""

    y: float
    d: int
    month: int
    age: int
    region_embed: tuple[float, float]
    occ_embed: tuple[float, float]
    occ_missing: int
    region: int
    occupation: str | None


@dataclass
class EmbeddedData:
    """Columnar embedded sample (Y, D, month, age, embeddings, raw codes)."""

    y: np.ndarray
    d: np.ndarray
    month: np.ndarray
    age: np.ndarray
    region_embed: np.ndarray  # (n, 2)
    occ_embed: np.ndarray  # (n, 2)
    occ_missing: np.ndarray
    region: np.ndarray
    occupation: np.ndarray  # object array, None for absent
    n_unseen: int = 0

    @property
    def n(self) -> int:
        return self.y.shape[0]

    def sample(self, i: int) -> EmbeddedSample:
        return EmbeddedSample(
            y=float(self.y[i]), d=int(self.d[i]), month=int(self.month[i]),
            age=int(self.age[i]),
            region_embed=(float(self.region_embed[i, 0]), float(self.region_embed[i, 1])),
            occ_embed=(float(self.occ_embed[i, 0]), float(self.occ_embed[i, 1])),
            occ_missing=int(self.occ_missing[i]), region=int(self.region[i]),
            occupation=self.occupation[i],
        )

    def subset(self, mask: np.ndarray) -> "EmbeddedData":
        return EmbeddedData(
            y=self.y[mask], d=self.d[mask], month=self.month[mask],
            age=self.age[mask], region_embed=self.region_embed[mask],
            occ_embed=self.occ_embed[mask], occ_missing=self.occ_missing[mask],
            region=self.region[mask], occupation=self.occupation[mask],
            n_unseen=self.n_unseen,
        )


def _median(values) -> float:
    vals = sorted(values)
    if not vals:
        return float("nan")
    mid = len(vals) // 2
    if len(vals) % 2:
        return float(vals[mid])
    return (vals[mid - 1] + vals[mid]) / 2.0


def _sorted_postings(postings) -> list:
    return sorted(postings, key=lambda p: (str(p.occupation), p.wage_lower, p.id))


def fit_region_embedding(postings, seekers) -> CategoryEmbedding:
    """Per-prefecture mean log offered lower wage and mean seeker age.

    Prefectures observed among seekers but absent from postings are
    reported via a warning and fall back to median substitution.
    """
    by_region: dict[int, list] = {}
    for p in sorted(postings, key=lambda p: (p.region, p.wage_lower, p.id)):
        by_region.setdefault(p.region, []).append(math.log(p.wage_lower))
    pred_wage = {r: sum(vals) / len(vals) for r, vals in by_region.items()}

    age_acc: dict[int, list] = {}
    for s in sorted(seekers, key=lambda s: (s.region, s.age, s.id)):
        age_acc.setdefault(s.region, []).append(s.age)
    mean_age = {r: sum(vals) / len(vals) for r, vals in age_acc.items()}

    unmatched = tuple(sorted(r for r in mean_age if r not in pred_wage))
    if unmatched:
        warnings.warn(
            f"prefectures with seekers but no postings use median wage: {unmatched}"
        )
    return CategoryEmbedding(
        kind="region",
        pred_wage=pred_wage,
        mean_age=mean_age,
        median_pred_wage=_median(pred_wage.values()),
        median_mean_age=_median(mean_age.values()),
        unmatched=unmatched,
    )


def fit_occupation_embedding(
    postings,
    seekers,
    lambda_grid=None,
    folds: int = 5,
    seed: int = 0,
) -> CategoryEmbedding:
    """Occupation wage dimension via LASSO on one-hot occupation indicators.

    Fits ln(wage_lower) on one-hot occupation dummies with an unpenalized
    intercept; λ is chosen by K-fold cross-validation over ``lambda_grid``
    (default: 50 log-spaced values from λ_max down to λ_max·1e-4). Rows are
    canonically sorted before fitting so the result is invariant to input
    order, bit for bit.
    """
    postings = _sorted_postings(postings)
    if not postings:
        raise ValueError("no postings to fit the occupation embedding")
    if lambda_grid is not None:
        lambda_grid = np.asarray(lambda_grid, dtype=np.float64)
        if lambda_grid.size == 0:
            raise ValueError("empty lambda grid")

    cats = sorted({str(p.occupation) for p in postings})
    cat_index = {c: j for j, c in enumerate(cats)}
    n = len(postings)
    X = np.zeros((n, len(cats)))
    y = np.empty(n)
    for i, p in enumerate(postings):
        X[i, cat_index[str(p.occupation)]] = 1.0
        y[i] = math.log(p.wage_lower)

    if len(cats) == 1 or n < 2:
        # one-hot column is constant: any λ gives the intercept-only fit
        pred_wage = {cats[0]: float(y.mean())}
    else:
        if lambda_grid is None:
            lambda_grid = default_lambda_grid(lasso_lambda_max(X, y))
        if lambda_grid.size == 1:
            lam = float(lambda_grid[0])
        else:
            lam, _ = lasso_cv(X, y, lambda_grid, folds=min(folds, n), seed=seed,
                              tol=1e-9, max_iter=100000)
        model = lasso_path_fit(X, y, lam, tol=1e-12, max_iter=200000,
                               grid=lambda_grid)
        eye = np.eye(len(cats))
        fitted = model.predict(eye)
        pred_wage = {c: float(fitted[j]) for c, j in cat_index.items()}

    age_acc: dict[str, list] = {}
    for s in sorted(
        (s for s in seekers if s.occupation is not None),
        key=lambda s: (s.occupation, s.age, s.id),
    ):
        age_acc.setdefault(s.occupation, []).append(s.age)
    mean_age = {c: sum(vals) / len(vals) for c, vals in age_acc.items()}

    return CategoryEmbedding(
        kind="occupation",
        pred_wage=pred_wage,
        mean_age=mean_age,
        median_pred_wage=_median(pred_wage.values()),
        median_mean_age=_median(mean_age.values()),
    )


def embed(seekers, region_emb: CategoryEmbedding, occ_emb: CategoryEmbedding) -> EmbeddedData:
    """Map seekers to embedded covariate rows.

    Missing occupation: occ_missing=1 and occ_embed = medians. A category
    unseen by its embedding also takes medians (counted, warned) but keeps
    occ_missing=0.
    """
    n = len(seekers)
    y = np.empty(n)
    d = np.empty(n, dtype=np.int64)
    month = np.empty(n, dtype=np.int64)
    age = np.empty(n, dtype=np.int64)
    region_embed = np.empty((n, 2))
    occ_embed = np.empty((n, 2))
    occ_missing = np.zeros(n, dtype=np.int64)
    region = np.empty(n, dtype=np.int64)
    occupation = np.empty(n, dtype=object)
    n_unseen = 0
    for i, s in enumerate(seekers):
        y[i] = outcome(s).y
        d[i] = s.gender
        month[i] = s.month
        age[i] = s.age
        region[i] = s.region
        occupation[i] = s.occupation
        rw, ra, seen_r = region_emb.lookup(s.region)
        region_embed[i, 0] = rw
        region_embed[i, 1] = ra
        if not seen_r:
            n_unseen += 1
        if s.occupation is None:
            occ_missing[i] = 1
            occ_embed[i, 0] = occ_emb.median_pred_wage
            occ_embed[i, 1] = occ_emb.median_mean_age
        else:
            ow, oa, seen_o = occ_emb.lookup(s.occupation)
            occ_embed[i, 0] = ow
            occ_embed[i, 1] = oa
            if not seen_o:
                n_unseen += 1
    if n_unseen:
        warnings.warn(f"{n_unseen} seeker fields used median substitution for unseen categories")
    return EmbeddedData(
        y=y, d=d, month=month, age=age, region_embed=region_embed,
        occ_embed=occ_embed, occ_missing=occ_missing, region=region,
        occupation=occupation, n_unseen=n_unseen,
    )


def design_matrix(data: EmbeddedData, covariate_set: str) -> DesignMatrix:
    """Assemble the nested design for one of the sets x1..x4.

    x1: month dummies (baseline January). x2: + age. x3: + prefecture
    embedding (wage, age). x4: + occupation embedding (wage, age) and the
    missing-occupation dummy.
    """
    if covariate_set not in COVARIATE_SETS:
        raise ValueError(f"unknown covariate set {covariate_set!r}")
    cols = []
    names = []
    for m in range(2, 13):
        cols.append((data.month == m).astype(np.float64))
        names.append(f"month_{m}")
    if covariate_set in ("x2", "x3", "x4"):
        cols.append(data.age.astype(np.float64))
        names.append("age")
    if covariate_set in ("x3", "x4"):
        cols.append(data.region_embed[:, 0])
        names.append("region_wage")
        cols.append(data.region_embed[:, 1])
        names.append("region_age")
    if covariate_set == "x4":
        cols.append(data.occ_embed[:, 0])
        names.append("occ_wage")
        cols.append(data.occ_embed[:, 1])
        names.append("occ_age")
        cols.append(data.occ_missing.astype(np.float64))
        names.append("occ_missing")
    return DesignMatrix.build(np.column_stack(cols), tuple(names))


def export_embeddings(path, region_emb: CategoryEmbedding, occ_emb: CategoryEmbedding) -> None:
    """Write both embeddings to one CSV (kind,category,pred_wage,mean_age)."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["kind", "category", "pred_wage", "mean_age"])
        for emb in (region_emb, occ_emb):
            cats = sorted(set(emb.pred_wage) | set(emb.mean_age), key=str)
            for c in cats:
                wage, age, _ = emb.lookup(c)
                writer.writerow([emb.kind, c, repr(wage), repr(age)])
            writer.writerow(
                [f"{emb.kind}_median", "", repr(emb.median_pred_wage), repr(emb.median_mean_age)]
            )


def import_embeddings(path) -> tuple[CategoryEmbedding, CategoryEmbedding]:
    """Inverse of export_embeddings."""
    data: dict[str, dict] = {
        "region": {"pred_wage": {}, "mean_age": {}, "medians": (float("nan"), float("nan"))},
        "occupation": {"pred_wage": {}, "mean_age": {}, "medians": (float("nan"), float("nan"))},
    }
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if header != ["kind", "category", "pred_wage", "mean_age"]:
            raise ValueError(f"{path}: unexpected embedding file header {header}")
        for kind, category, wage, age in reader:
            if kind.endswith("_median"):
                data[kind[: -len("_median")]]["medians"] = (float(wage), float(age))
                continue
            key = int(category) if kind == "region" else category
            data[kind]["pred_wage"][key] = float(wage)
            data[kind]["mean_age"][key] = float(age)
    out = []
    for kind in ("region", "occupation"):
        d = data[kind]
        out.append(
            CategoryEmbedding(
                kind=kind, pred_wage=d["pred_wage"], mean_age=d["mean_age"],
                median_pred_wage=d["medians"][0], median_mean_age=d["medians"][1],
            )
        )
    return out[0], out[1]

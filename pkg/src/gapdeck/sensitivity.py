"""Omitted-variable sensitivity for the residual gap, benchmarked against
the explanatory gain of the occupation block.

A hypothetical omitted confounder of strength kappa explains kappa times
the occupation block's incremental share of outcome and gender variation.
kappa_star is the smallest strength whose bias bound swallows the residual.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .cells import CellTable, EmbeddedData
from .decomposition import DecompositionResult, GapEstimate
from .learners import EstimationError


@dataclass
class SensitivityResult:
    gain_y: float
    gain_d: float
    scale: float
    residual: GapEstimate
    occupation_contribution: GapEstimate
    kappa_star: float  # math.inf when the bound never reaches the residual
    bounded: bool
    kappa_max: float
    curve: list[tuple[float, float]]


def _clamped_gain(sse_before: float, sse_after: float, what: str) -> float:
    if sse_before <= 0.0:
        return 0.0
    gain = (sse_before - sse_after) / sse_before
    if gain < 0.0:
        warnings.warn(
            f"negative incremental {what} gain clamped to zero", stacklevel=3
        )
        return 0.0
    return float(gain)


def bound_value(kappa: float, gain_y: float, gain_d: float, scale: float) -> float:
    """Bias bound at confounder strength kappa; infinite past the gain limit."""
    if kappa < 0.0:
        raise ValueError("kappa must be nonnegative")
    if kappa == 0.0 or gain_y == 0.0 or gain_d == 0.0:
        return 0.0
    ky = kappa * gain_y
    kd = kappa * gain_d
    if ky >= 1.0 or kd >= 1.0:
        return math.inf
    return math.sqrt(ky / (1.0 - ky)) * math.sqrt(kd / (1.0 - kd)) * scale


def solve_kappa(
    residual_abs: float,
    gain_y: float,
    gain_d: float,
    scale: float,
    kappa_hi: float,
    tol: float = 1e-4,
) -> float:
    """Smallest kappa with bound >= |residual|; inf when out of reach."""
    if residual_abs == 0.0:
        return 0.0
    if bound_value(kappa_hi, gain_y, gain_d, scale) < residual_abs:
        return math.inf
    lo, hi = 0.0, kappa_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if bound_value(mid, gain_y, gain_d, scale) >= residual_abs:
            hi = mid
        else:
            lo = mid
    return hi


def sensitivity_analysis(
    data: EmbeddedData,
    table: CellTable,
    result: DecompositionResult,
    kappa_max: float = 10.0,
    curve_points: int = 100,
) -> SensitivityResult:
    """Benchmark the residual gap against the occupation block's gains.

    Residual and occupation contribution are copied from ``result``
    unchanged; the gains compare the out-of-fold nuisances of the last two
    covariate sets.
    """
    for cs in ("x3", "x4"):
        if cs not in result.fits:
            raise EstimationError(f"sensitivity needs {cs} nuisances in the result")
    f3 = result.fits["x3"]
    f4 = result.fits["x4"]
    kept = ~table.trimmed_sample
    y = data.y[kept]
    d = np.asarray(data.d[kept], dtype=float)
    male = d == 0

    sse_y3 = float(((y[male] - f3.m0[male]) ** 2).sum())
    sse_y4 = float(((y[male] - f4.m0[male]) ** 2).sum())
    gain_y = _clamped_gain(sse_y3, sse_y4, "outcome")
    sse_d3 = float(((d - f3.e_x) ** 2).sum())
    sse_d4 = float(((d - f4.e_x) ** 2).sum())
    gain_d = _clamped_gain(sse_d3, sse_d4, "gender")

    p_hat = d.mean()
    e = np.clip(f4.e_x, f4.clip_eps, 1.0 - f4.clip_eps)
    alpha = (d - (1.0 - d) * e / (1.0 - e)) / p_hat
    eps_hat = y - np.where(d == 1, f4.m1, f4.m0)
    scale = float(alpha.std(ddof=1) * eps_hat.std(ddof=1))

    max_gain = max(gain_y, gain_d)
    kappa_hi = kappa_max if max_gain <= 0.0 else min(kappa_max, 0.999 / max_gain)
    grid = np.linspace(0.0, kappa_hi, curve_points)
    curve = [(float(k), bound_value(float(k), gain_y, gain_d, scale)) for k in grid]
    kappa_star = solve_kappa(
        abs(result.residual.estimate), gain_y, gain_d, scale, kappa_hi
    )
    return SensitivityResult(
        gain_y=gain_y,
        gain_d=gain_d,
        scale=scale,
        residual=result.residual,
        occupation_contribution=result.contributions["occupation"],
        kappa_star=kappa_star,
        bounded=math.isfinite(kappa_star),
        kappa_max=kappa_max,
        curve=curve,
    )

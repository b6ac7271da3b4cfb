"""G-squared conditional independence test for binary lagged variables."""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InsufficientDataError
from .timeseries import BinaryPanel

_EPS = 1e-15
_TINY = sys.float_info.min / sys.float_info.epsilon
_MAX_ITER = 10_000


def _gamma_series(a, x):
    # lower regularized P(a, x); converges fast for x < a + 1
    term = total = 1.0 / a
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cont_frac(a, x):
    # upper regularized Q(a, x) by the modified Lentz method, for x >= a + 1
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def chi_square_sf(x: float, dof: int) -> float:
    """P(chi2_dof > x), i.e. the regularized upper incomplete gamma Q(dof/2, x/2)."""
    if dof < 1:
        raise ValueError("dof must be ≥ 1")
    if x < 0:
        raise ValueError("x must be ≥ 0")
    a, h = dof / 2.0, x / 2.0
    if h == 0:
        return 1.0
    if h < a + 1.0:
        q = 1.0 - _gamma_series(a, h)
    else:
        q = _gamma_cont_frac(a, h)
    return min(max(q, 0.0), 1.0)


@dataclass(frozen=True, eq=False)
class ContingencyTable:
    """Counts indexed ``[x, y, stratum]``; stratum enumerates conditioning bit patterns."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 3 or counts.shape[:2] != (2, 2):
            raise ValueError("counts must have shape (2, 2, K)")
        k = counts.shape[2]
        if k < 1 or k & (k - 1):
            raise ValueError("number of strata must be a power of two")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def n_conditions(self) -> int:
        return self.counts.shape[2].bit_length() - 1


@dataclass(frozen=True)
class CiResult:
    statistic: float
    dof: int
    p_value: float
    independent: bool


def tabulate(x: np.ndarray, y: np.ndarray, z: Sequence[np.ndarray] = ()) -> ContingencyTable:
    """Count aligned binary samples; the first conditioner is the most significant stratum bit."""
    code = np.zeros(len(x), dtype=np.int64)
    for col in z:
        code = code * 2 + col
    k = 1 << len(z)
    flat = code * 4 + np.asarray(x, dtype=np.int64) * 2 + np.asarray(y, dtype=np.int64)
    counts = np.bincount(flat, minlength=4 * k).reshape(k, 2, 2)
    return ContingencyTable(np.moveaxis(counts, 0, 2))


def align_lagged(
    panel: BinaryPanel,
    x: str,
    lag_x: int,
    y: str,
    lag_y: int,
    z: Sequence[tuple[str, int]] = (),
) -> ContingencyTable:
    """Tabulate ``x[t - lag_x]`` against ``y[t - lag_y]`` given ``z`` over all valid ``t``."""
    lags = [lag_x, lag_y, *(lag for _, lag in z)]
    if min(lags) < 0:
        raise ValueError("lags must be ≥ 0")
    top = max(lags)
    n = panel.T - top
    if n < 1:
        raise InsufficientDataError(f"lag {top} leaves no samples in a series of length {panel.T}")

    def column(name, lag):
        return panel.series(name)[top - lag : panel.T - lag]

    return tabulate(column(x, lag_x), column(y, lag_y), [column(nm, lag) for nm, lag in z])


def gsquare(table: ContingencyTable, alpha: float = 0.01) -> CiResult:
    """G² = 2 Σ O ln(O/E) summed over strata where both x and y vary.

    Each informative stratum adds one degree of freedom. With none, the test
    cannot reject and reports independence with p = 1.
    """
    obs = table.counts.astype(float)
    n_k = obs.sum(axis=(0, 1))
    rows = obs.sum(axis=1)  # (2, K) margins of x
    cols = obs.sum(axis=0)  # (2, K) margins of y
    keep = np.all(rows > 0, axis=0) & np.all(cols > 0, axis=0)
    dof = int(keep.sum())
    if dof == 0:
        return CiResult(0.0, 0, 1.0, True)
    o = obs[:, :, keep]
    expected = rows[:, None, keep] * cols[None, :, keep] / n_k[keep]
    mask = o > 0
    stat = 2.0 * float(np.sum(o[mask] * np.log(o[mask] / expected[mask])))
    stat = max(stat, 0.0)
    p = chi_square_sf(stat, dof)
    return CiResult(stat, dof, p, p > alpha)

"""Simultaneous confidence bands for calibration curves of binary outcomes.

Four constructions share one representation (StepBand): the raw band of
Bonferroni-combined Clopper-Pearson bounds over an index-pair family, its
non-crossing repair around the isotonic fit, the rounding-restricted
variant of that family, and the wider Hoeffding-style band around
isotonic block averages.

Per-pair confidence bounds are evaluated once in batches; per-knot values
then come from monotone suffix/prefix sweeps, so the full family costs
O(|family|) bound evaluations instead of O(N * |family|).
"""

import math
from dataclasses import dataclass

import numpy as np

from .special import cp_bounds_batch

__all__ = [
    "IndexPairFamily",
    "StepBand",
    "full_index_family",
    "rounded_index_family",
    "raw_band",
    "noncrossing_band",
    "yb_band",
    "evaluate_band",
]

_PAIR_CHUNK = 1 << 20
_YB_CHUNK = 1 << 22


@dataclass(frozen=True)
class IndexPairFamily:
    """A set of (j, k) tie-group index pairs with its Bonferroni divisor.

    Pairs are stored row-compressed: for the r-th admissible start index
    row_j[r], the admissible end indices are k_values[row_first_k[r]:].
    Both families have this suffix structure, which is what the sweep in
    raw_band exploits. `pairs` materializes the flat arrays on demand;
    construction itself never does, so the full family stays cheap to
    describe even when N^2 pairs would not fit in memory.

    correction is the divisor applied to alpha: N^2+N for the full family
    (two bounds per pair), |pairs| for the rounded family.
    """

    kind: str
    n_groups: int
    correction: int
    row_j: np.ndarray
    k_values: np.ndarray
    row_first_k: np.ndarray
    K: int | None = None

    @property
    def pair_count(self):
        return int((self.k_values.shape[0] - self.row_first_k).sum())

    @property
    def pairs(self):
        """Flat (j_indices, k_indices) arrays, row-major by j then k."""
        sizes = self.k_values.shape[0] - self.row_first_k
        js = np.repeat(self.row_j, sizes)
        if self.row_j.shape[0] == 0:
            return js, np.empty(0, dtype=np.int64)
        ks = np.concatenate(
            [self.k_values[f:] for f in self.row_first_k.tolist()]
        )
        return js, ks


def full_index_family(data):
    """All (j, k) index pairs with j <= k over the N tie groups."""
    n = data.n_groups
    idx = np.arange(n, dtype=np.int64)
    return IndexPairFamily(
        kind="full",
        n_groups=n,
        correction=n * n + n,
        row_j=idx,
        k_values=idx,
        row_first_k=idx,
    )


def rounded_index_family(data, K):
    """Index pairs of maximal covariate blocks inside grid windows.

    A window is [r/K, s/K] for integers r <= s; a covariate x belongs to
    it when r <= K*x <= s holds in float64, which is the convention the
    brute-force tests share. Each window's block of covariates yields one
    (first, last) group pair; identical pairs from different windows are
    counted once. The enumeration walks the images of the two monotone
    step maps r -> first group and s -> last group instead of the windows
    themselves, so it is O(N log N) regardless of K.
    """
    if K < 1:
        raise ValueError(f"grid resolution K={K} must be >= 1")
    kx = float(K) * data.distinct_x
    fl = np.floor(kx)
    ce = np.ceil(kx)
    # group g can open a block iff some integer r satisfies
    # K*x_{g-1} < r <= K*x_g; the smallest such r is floor(K*x_{g-1}) + 1
    r_min = np.concatenate(([-np.inf], fl[:-1] + 1.0))
    valid_j = r_min <= fl
    # group h can close a block iff some integer s satisfies
    # K*x_h <= s < K*x_{h+1}; the largest such s is ceil(K*x_{h+1}) - 1
    s_max = np.concatenate((ce[1:] - 1.0, [np.inf]))
    valid_k = s_max >= ce

    row_j = np.flatnonzero(valid_j)
    k_values = np.flatnonzero(valid_k)
    # pair (g, h) realizable iff g <= h and some window has r <= s,
    # i.e. the smallest r opening g is <= the largest s closing h
    i_geq = np.searchsorted(k_values, row_j, side="left")
    i_rs = np.searchsorted(s_max[k_values], r_min[row_j], side="left")
    row_first_k = np.maximum(i_geq, i_rs)

    fam = IndexPairFamily(
        kind="rounded",
        n_groups=data.n_groups,
        correction=0,
        row_j=row_j,
        k_values=k_values,
        row_first_k=row_first_k,
        K=K,
    )
    object.__setattr__(fam, "correction", fam.pair_count)
    return fam


@dataclass(frozen=True)
class StepBand:
    """Lower/upper step functions stored at the distinct covariates.

    Between knots the upper bound is left-continuous, U(x) = U(x_i) on
    (x_{i-1}, x_i], and the lower bound is right-continuous, L(x) = L(x_i)
    on [x_i, x_{i+1}). Outside the knot range the defining optimizations
    are empty on one side: upper is 1 right of the last knot and lower is
    0 left of the first; the remaining two tails continue the end levels.
    Both level arrays are nondecreasing. Lower may exceed upper at a knot
    (a crossing); diagnostics consume that, nothing here forbids it.
    """

    knots: np.ndarray
    lower_levels: np.ndarray
    upper_levels: np.ndarray


def _group_cumulants(data):
    b = data.group_bounds
    return b, data.prefix_sums[b]


def raw_band(data, family, alpha):
    """Bonferroni-combined Clopper-Pearson band over an index family.

    Parameters
    ----------
    data : SortedBinaryData
    family : IndexPairFamily
        Built from the same data.
    alpha : float in (0, 1)
        Simultaneous significance level; each pair bound runs at
        alpha / family.correction.

    Returns
    -------
    StepBand
        upper(x_i) = min over pairs with j >= i of the pair's upper bound,
        lower(x_i) = max over pairs with k <= i of the pair's lower bound,
        with empty min = 1 and empty max = 0.

    Each pair's bounds are evaluated exactly once; the per-knot extremes
    come from a suffix-min over row minima (upper) and a running max per
    end index (lower).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha={alpha} outside (0, 1)")
    if family.n_groups != data.n_groups:
        raise ValueError("index family was built from different data")
    delta = alpha / family.correction
    n_groups = data.n_groups
    b, ps = _group_cumulants(data)

    row_j = family.row_j
    k_values = family.k_values
    first = family.row_first_k
    n_cols = k_values.shape[0]
    row_sizes = n_cols - first
    cum = np.concatenate(([0], np.cumsum(row_sizes)))

    rowmin_u = np.full(n_groups, np.inf)
    colmax_l = np.full(n_groups, -np.inf)

    n_rows = row_j.shape[0]
    r0 = 0
    while r0 < n_rows:
        r1 = int(np.searchsorted(cum, cum[r0] + _PAIR_CHUNK, side="left"))
        r1 = max(r1, r0 + 1)
        sizes = row_sizes[r0:r1]
        js = np.repeat(row_j[r0:r1], sizes)
        ks = np.concatenate([k_values[f:] for f in first[r0:r1].tolist()])
        m = b[ks + 1] - b[js]
        z = ps[ks + 1] - ps[js]
        lo, up = cp_bounds_batch(z, m, delta)
        starts = np.concatenate(([0], np.cumsum(sizes)))[:-1]
        rowmin_u[row_j[r0:r1]] = np.minimum.reduceat(up, starts)
        np.maximum.at(colmax_l, ks, lo)
        r0 = r1

    upper = np.minimum.accumulate(rowmin_u[::-1])[::-1]
    upper = np.where(np.isfinite(upper), upper, 1.0)
    lower = np.maximum.accumulate(colmax_l)
    lower = np.where(np.isfinite(lower), lower, 0.0)
    return StepBand(
        knots=data.distinct_x.copy(), lower_levels=lower, upper_levels=upper
    )


def noncrossing_band(raw, fit):
    """Repair a raw band so it always sandwiches the isotonic fit.

    Pointwise at each knot: lower becomes min(lower, fitted value), upper
    becomes max(upper, fitted value). Coverage is inherited from the raw
    band because the repair only widens it.
    """
    if fit.n_groups != raw.knots.shape[0]:
        raise ValueError("fit and band disagree on the number of tie groups")
    g = fit.group_levels()
    return StepBand(
        knots=raw.knots,
        lower_levels=np.minimum(raw.lower_levels, g),
        upper_levels=np.maximum(raw.upper_levels, g),
    )


def yb_band(data, fit, alpha):
    """Hoeffding-style band around isotonic block averages.

    upper(x_i) is the minimum over pairs (j, k) with x_j >= x_i of the
    block average of fitted values plus sqrt(log((N^2+N)/alpha)/(2 m));
    lower mirrors it with a minus. The minimum is attained with j = i and
    k a right end of a constancy region (symmetrically for the lower
    bound), so only O(N * #blocks) candidates are evaluated. Levels are
    clipped into [0, 1] at the end; clipping is monotone, so it commutes
    with the minimization.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha={alpha} outside (0, 1)")
    n_groups = data.n_groups
    if fit.n_groups != n_groups:
        raise ValueError("fit was built from different data")
    b = data.group_bounds
    sizes = np.diff(b).astype(np.float64)
    fiso = np.concatenate(([0.0], np.cumsum(fit.group_levels() * sizes)))
    logterm = math.log((n_groups * n_groups + n_groups) / alpha)

    upper = np.empty(n_groups, dtype=np.float64)
    lower = np.empty(n_groups, dtype=np.float64)
    lefts = fit.block_starts
    rights = fit.block_ends
    for blk in range(lefts.shape[0]):
        i_all = np.arange(lefts[blk], rights[blk] + 1, dtype=np.int64)
        k_arr = rights[blk:]
        j_arr = lefts[: blk + 1]
        width = max(k_arr.shape[0], j_arr.shape[0])
        step = max(1, _YB_CHUNK // width)
        for c0 in range(0, i_all.shape[0], step):
            i_arr = i_all[c0 : c0 + step]
            den = (b[k_arr + 1][None, :] - b[i_arr][:, None]).astype(np.float64)
            vals = (fiso[k_arr + 1][None, :] - fiso[i_arr][:, None]) / den
            vals += np.sqrt(logterm / (2.0 * den))
            upper[i_arr] = vals.min(axis=1)
            den = (b[i_arr + 1][:, None] - b[j_arr][None, :]).astype(np.float64)
            vals = (fiso[i_arr + 1][:, None] - fiso[j_arr][None, :]) / den
            vals -= np.sqrt(logterm / (2.0 * den))
            lower[i_arr] = vals.max(axis=1)

    np.clip(upper, 0.0, 1.0, out=upper)
    np.clip(lower, 0.0, 1.0, out=lower)
    return StepBand(
        knots=data.distinct_x.copy(), lower_levels=lower, upper_levels=upper
    )


def evaluate_band(band, x, extrapolate):
    """Evaluate (lower, upper) at x, honoring the continuity conventions.

    At a knot both levels are the knot's own; strictly between knots the
    lower bound carries over from the left knot and the upper bound from
    the right. With extrapolate=False, x outside [first knot, last knot]
    raises; with True, the step functions continue per the sentinel rules
    (lower 0 left / end level right, upper start level left / 1 right).
    Accepts a scalar or an array and returns matching shapes.
    """
    knots = band.knots
    xarr = np.asarray(x, dtype=np.float64)
    scalar = xarr.ndim == 0
    xq = np.atleast_1d(xarr)
    if not extrapolate:
        if (xq < knots[0]).any() or (xq > knots[-1]).any():
            raise ValueError(
                "x outside the observed covariate range; pass extrapolate=True"
            )
    n = knots.shape[0]
    ui = np.searchsorted(knots, xq, side="left")
    upper = np.where(
        ui == n, 1.0, band.upper_levels[np.minimum(ui, n - 1)]
    )
    li = np.searchsorted(knots, xq, side="right") - 1
    lower = np.where(li < 0, 0.0, band.lower_levels[np.maximum(li, 0)])
    if scalar:
        return float(lower[0]), float(upper[0])
    return lower, upper

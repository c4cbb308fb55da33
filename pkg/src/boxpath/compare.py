"""Statistical comparison of Monte Carlo histograms against analytic grids.

Model bin probabilities come from exact piecewise-linear integration of
the analytic density over the histogram bins, so the comparison measures
sampling noise plus genuine model error, not re-binning artifacts.
Reports carry an L1 distance between bin probability vectors (range 0-2),
a chi-square test with small-expectation bins pooled, and per-axis
Kolmogorov-Smirnov statistics on the marginal CDFs.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy import special as _sp_special
from scipy import stats as _sp_stats

from .density import GridDensity1D, GridDensity3D, bin_masses_1d, bin_masses_3d
from .errors import EmptyCellError, IncompatibleGridError
from .montecarlo import JointHistogram

__all__ = [
    "ComparisonReport",
    "KsResult",
    "compare_joint",
    "compare_length",
    "histogram_l1",
    "location_counts",
    "location_pdf_from_grid",
]


@dataclass(frozen=True)
class KsResult:
    axis: str
    statistic: float
    pvalue: float


@dataclass(frozen=True)
class ComparisonReport:
    """Distances between one empirical histogram and one analytic density."""

    l1: float
    chi2: float
    dof: int
    chi2_pvalue: float
    ks: tuple[KsResult, ...]
    n_samples: int
    n_bins: int
    in_range_fraction: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ks"] = list(d["ks"])  # JSON-shaped: lists, not tuples
        return d

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kwargs)


def _chi2_pooled(counts: np.ndarray, probs: np.ndarray, min_expected: float = 5.0) -> tuple[float, int, float]:
    """Chi-square with bins of expected count < min_expected pooled together."""
    counts = counts.ravel().astype(float)
    n = counts.sum()
    expected = probs.ravel() * n
    small = expected < min_expected
    kept_c, kept_e = counts[~small], expected[~small]
    if small.any() and expected[small].sum() > 0:
        kept_c = np.append(kept_c, counts[small].sum())
        kept_e = np.append(kept_e, expected[small].sum())
    if kept_e.size < 2:
        return 0.0, 0, 1.0
    stat = float(((kept_c - kept_e) ** 2 / kept_e).sum())
    dof = kept_e.size - 1
    return stat, dof, float(_sp_stats.chi2.sf(stat, dof))


def _ks_binned(counts_1d: np.ndarray, probs_1d: np.ndarray, n: int) -> tuple[float, float]:
    emp = np.cumsum(counts_1d) / max(1, counts_1d.sum())
    mod = np.cumsum(probs_1d)
    d = float(np.abs(emp - mod).max())
    return d, float(_sp_special.kolmogorov(np.sqrt(n) * d))


def compare_joint(hist: JointHistogram, density: GridDensity3D) -> ComparisonReport:
    """Compare a pooled class histogram with an analytic joint density."""
    q = bin_masses_3d(density, hist.n_edges, hist.u_edges, hist.v_edges)
    q = np.clip(q, 0.0, None)
    if q.sum() <= 0:
        raise IncompatibleGridError("analytic density has no mass over the histogram bins")
    if q.shape != hist.counts.shape:
        raise IncompatibleGridError(f"bin shapes differ: {q.shape} vs {hist.counts.shape}")
    q = q / q.sum()
    n_in = hist.in_range
    if n_in == 0:
        raise EmptyCellError("histogram holds no in-range samples", 0)
    p = hist.counts.astype(float) / n_in
    l1 = float(np.abs(p - q).sum())
    chi2, dof, pval = _chi2_pooled(hist.counts, q)
    ks = []
    for axis, name in ((0, "n"), (1, "u"), (2, "v")):
        others = tuple(a for a in range(3) if a != axis)
        d, kp = _ks_binned(hist.counts.sum(axis=others), q.sum(axis=others), n_in)
        ks.append(KsResult(name, d, kp))
    return ComparisonReport(
        l1=l1,
        chi2=chi2,
        dof=dof,
        chi2_pvalue=pval,
        ks=tuple(ks),
        n_samples=hist.total,
        n_bins=int(q.size),
        in_range_fraction=n_in / max(1, hist.total),
    )


def compare_length(
    edges: np.ndarray, counts: np.ndarray, density: GridDensity1D
) -> ComparisonReport:
    """Compare a 1-d length histogram with an analytic length density."""
    q = np.clip(bin_masses_1d(density, edges), 0.0, None)
    if q.sum() <= 0:
        raise IncompatibleGridError("analytic density has no mass over the histogram bins")
    q = q / q.sum()
    n_in = int(counts.sum())
    if n_in == 0:
        raise EmptyCellError("length histogram is empty", 0)
    p = counts.astype(float) / n_in
    l1 = float(np.abs(p - q).sum())
    chi2, dof, pval = _chi2_pooled(counts, q)
    d, kp = _ks_binned(counts, q, n_in)
    return ComparisonReport(
        l1=l1,
        chi2=chi2,
        dof=dof,
        chi2_pvalue=pval,
        ks=(KsResult("n", d, kp),),
        n_samples=n_in,
        n_bins=int(q.size),
        in_range_fraction=1.0,
    )


def histogram_l1(a: JointHistogram, b: JointHistogram) -> float:
    """L1 distance between the bin-probability vectors of two histograms."""
    if a.counts.shape != b.counts.shape:
        raise IncompatibleGridError("histograms have different bin shapes")
    return float(np.abs(a.probabilities() - b.probabilities()).sum())


def location_counts(
    hist: JointHistogram, cell: tuple[float, float, float]
) -> tuple[np.ndarray, np.ndarray]:
    """Length histogram of samples whose exit falls in a location cell.

    `cell` is (u, v, half_width) in canonical exit coordinates.  Bins are
    weighted by their overlap area with the cell; raises EmptyCellError
    when the weighted count vanishes.
    """
    u, v, half = cell
    uw = _overlap_fractions(hist.u_edges, u - half, u + half)
    vw = _overlap_fractions(hist.v_edges, v - half, v + half)
    weighted = np.einsum("nuv,u,v->n", hist.counts.astype(float), uw, vw)
    if weighted.sum() <= 0:
        raise EmptyCellError(f"no samples exit within the cell around ({u}, {v})", 0)
    return hist.n_edges, weighted


def _overlap_fractions(edges: np.ndarray, lo: float, hi: float) -> np.ndarray:
    left = np.maximum(edges[:-1], lo)
    right = np.minimum(edges[1:], hi)
    return np.clip(right - left, 0.0, None) / np.diff(edges)


def location_pdf_from_grid(
    density: GridDensity3D, cell: tuple[float, float, float]
) -> GridDensity1D:
    """Length density of an analytic joint restricted to a location cell.

    The cell is clipped to the grid domain; the restriction uses exact PL
    integration over the cell rectangle and is renormalized.
    """
    u, v, half = cell
    (u_lo, u_hi), (v_lo, v_hi) = density.domain[1], density.domain[2]
    a0, a1 = max(u_lo, u - half), min(u_hi, u + half)
    b0, b1 = max(v_lo, v - half), min(v_hi, v + half)
    if not (a1 > a0 and b1 > b0):
        raise ValueError("cell does not intersect the density domain")
    part = density.band_integral(1, a0, a1).band_integral(1, b0, b1)
    return part.normalized(force=True)

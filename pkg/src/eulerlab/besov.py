"""Besov semi-norms of discrete fields and mollifier decay rates.

The semi-norm of exponent beta in L^p is the supremum over nonzero shifts h
of ||f(.+h) - f||_p / |h|^beta, approximated here over lattice shifts.  The
module also fits regularity exponents from dyadic shift scans and verifies
the three decay estimates a mollifier family satisfies on such a field:

    ||f_eps - f||_p           <= |f| * eps**beta,
    ||f(.+h) - f||_p          <= |f| * |h|**beta,
    ||grad f_eps||_p          <= |f| * eps**(beta - 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import DomainError, ResolutionError
from .grid import (
    PERIOD,
    PeriodicGrid,
    ScalarField,
    build_mollifier,
    grad_values,
    lp_norm_values,
    mollify_values,
    offset_length,
    shift_values,
)

#: Fraction of the period a measurement shift may reach.
MAX_SHIFT_FRACTION = 0.25

#: Default slack accepted when asserting the one-sided mollifier estimates.
ESTIMATE_SLACK = 0.05


def dyadic_shift_ladder(
    grid: PeriodicGrid,
    axes: tuple[int, ...] | None = None,
    include_diagonals: bool = True,
    include_triples: bool = True,
    max_cells: int | None = None,
) -> list[tuple[int, ...]]:
    """Dyadic lattice shifts 2**k (and 3*2**k) cells up to a quarter period.

    Axis-aligned shifts in each requested axis, plus diagonals in 2D.  The
    3*2**k rungs fill the octave gaps so that a supremum over the ladder is
    a fair stand-in for the supremum over all shifts.
    """
    n = grid.cells_per_dim
    cmax = max(1, n // 4)
    if max_cells is not None:
        cmax = min(cmax, max_cells)
    sizes = {2**k for k in range(int(math.log2(cmax)) + 1)}
    if include_triples:
        sizes |= {3 * 2**k for k in range(int(math.log2(cmax)) + 1) if 3 * 2**k <= cmax}
    sizes = sorted(sizes)
    if axes is None:
        axes = tuple(range(grid.dims))
    shifts: list[tuple[int, ...]] = []
    for c in sizes:
        for ax in axes:
            off = [0] * grid.dims
            off[ax] = c
            shifts.append(tuple(off))
        if grid.dims == 2 and include_diagonals and len(axes) == 2:
            shifts.append((c, c))
    cap = MAX_SHIFT_FRACTION * PERIOD + 1e-12
    return sorted(off for off in set(shifts) if offset_length(grid, off) <= cap)


def _diff_norm(field: ScalarField, offsets: tuple[int, ...], p: float) -> float:
    moved = shift_values(field.values, offsets)
    return lp_norm_values(moved - field.values, p, field.grid.cell_volume)


def seminorm(
    field: ScalarField, beta: float, p: float, shift_set: list[tuple[int, ...]]
) -> float:
    """max over the shift set of ||f(.+h) - f||_p / |h|^beta.

    Deterministic: shifts are scanned in sorted order and ties keep the
    earlier (lexicographically smaller) shift.
    """
    if not 0.0 < beta <= 1.0:
        raise DomainError(f"beta must lie in (0, 1], got {beta}")
    if p != np.inf and p < 1.0:
        raise DomainError(f"p must be >= 1, got {p}")
    if not shift_set:
        raise ValueError("shift set must be nonempty")
    grid = field.grid
    best = 0.0
    for offsets in sorted(shift_set):
        if all(c == 0 for c in offsets):
            raise ValueError("zero shift not allowed in shift set")
        h = offset_length(grid, offsets)
        if h > MAX_SHIFT_FRACTION * PERIOD + 1e-12:
            raise ValueError(f"shift {offsets} exceeds a quarter period")
        val = _diff_norm(field, offsets, p) / h**beta
        if val > best:
            best = val
    return best


def _loglog_fit(xs: np.ndarray, ys: np.ndarray) -> tuple[float, float]:
    """Least-squares slope of log ys against log xs, with residual."""
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = float(np.sqrt(np.mean((ly - (slope * lx + intercept)) ** 2)))
    return float(slope), resid


def _asymptotic_window(m: int) -> slice:
    # drop the two smallest and two largest scales once enough rungs exist
    return slice(2, m - 2) if m >= 7 else slice(0, m)


@dataclass(frozen=True)
class RegularityFit:
    alpha: float
    residual: float
    lengths: np.ndarray
    diff_norms: np.ndarray
    window: slice
    degenerate: bool = False


def fit_regularity(
    field: ScalarField, p: float, shift_range: list[tuple[int, ...]] | None = None
) -> RegularityFit:
    """Slope of log ||f(.+h) - f||_p against log |h| over a dyadic ladder.

    A constant field has no scale to fit; the result is flagged degenerate
    with alpha = +inf.  The default ladder stops at a sixteenth of the
    period: larger shifts decorrelate and would flatten the slope.
    """
    if shift_range is None:
        shift_range = dyadic_shift_ladder(
            field.grid, include_triples=False, max_cells=field.grid.cells_per_dim // 16
        )
    shift_range = sorted(shift_range, key=lambda off: offset_length(field.grid, off))
    hs = np.array([offset_length(field.grid, off) for off in shift_range])
    if len(hs) < 4 or hs[-1] / hs[0] < 7.9:
        raise ValueError("shift range must span at least 3 octaves")
    norms = np.array([_diff_norm(field, off, p) for off in shift_range])
    if np.min(norms) == 0.0:
        return RegularityFit(math.inf, 0.0, hs, norms, slice(0, 0), degenerate=True)
    win = _asymptotic_window(len(hs))
    slope, resid = _loglog_fit(hs[win], norms[win])
    return RegularityFit(slope, resid, hs, norms, win)


@dataclass(frozen=True)
class MollifierRateReport:
    """Per-epsilon values of the three mollifier quantities and their fits."""

    p: float
    alpha: float
    seminorm: float
    eps: np.ndarray
    mollify_err: np.ndarray
    shift_sup: np.ndarray
    grad_norm: np.ndarray
    slopes: tuple[float, float, float]
    window: slice
    bound_ok: np.ndarray  # one row per estimate, one column per eps
    slack: float = ESTIMATE_SLACK


def verify_mollifier_rates(
    field: ScalarField,
    alpha: float,
    p: float,
    eps_range: list[float],
    shift_set: list[tuple[int, ...]] | None = None,
    slack: float = ESTIMATE_SLACK,
) -> MollifierRateReport:
    """Measure the three mollifier quantities over eps and fit their rates.

    The one-sided bounds use the semi-norm measured on ``shift_set`` and
    admit ``slack`` relative headroom.  Slopes are fitted on the asymptotic
    window (two smallest and two largest eps dropped when 7+ are given).
    """
    grid = field.grid
    if shift_set is None:
        shift_set = dyadic_shift_ladder(grid)
    sem = seminorm(field, alpha, p, shift_set)
    eps_range = sorted(float(e) for e in eps_range)
    if eps_range[0] < 2.0 * grid.cell_width:
        raise ResolutionError(
            f"eps {eps_range[0]:g} below grid resolution {2.0 * grid.cell_width:g}"
        )
    m_err, s_sup, g_nrm = [], [], []
    vol = grid.cell_volume
    for eps in eps_range:
        mol = build_mollifier(grid, eps)
        fe = mollify_values(field.values, mol)
        m_err.append(lp_norm_values(fe - field.values, p, vol))
        rmax = mol.radius_cells
        sup = 0.0
        for off in _ball_offsets(grid, rmax, eps):
            sup = max(sup, _diff_norm(field, off, p))
        s_sup.append(sup)
        gmag = np.sqrt(np.sum(grad_values(fe, grid.cell_width) ** 2, axis=0))
        g_nrm.append(lp_norm_values(gmag, p, vol))
    eps_arr = np.array(eps_range)
    m_err, s_sup, g_nrm = np.array(m_err), np.array(s_sup), np.array(g_nrm)
    win = _asymptotic_window(len(eps_arr))
    slopes = (
        _loglog_fit(eps_arr[win], m_err[win])[0],
        _loglog_fit(eps_arr[win], s_sup[win])[0],
        _loglog_fit(eps_arr[win], g_nrm[win])[0],
    )
    cap = (1.0 + slack) * sem
    bound_ok = np.stack(
        [
            m_err <= cap * eps_arr**alpha,
            s_sup <= cap * eps_arr**alpha,
            g_nrm <= cap * eps_arr ** (alpha - 1.0),
        ]
    )
    return MollifierRateReport(
        p, alpha, sem, eps_arr, m_err, s_sup, g_nrm, slopes, win, bound_ok, slack
    )


def _ball_offsets(grid: PeriodicGrid, rmax: int, eps: float) -> list[tuple[int, ...]]:
    """Nonzero lattice offsets with |h| < eps."""
    out = []
    rng = range(-rmax, rmax + 1)
    if grid.dims == 1:
        out = [(c,) for c in range(1, rmax + 1)]
    else:
        for cx in rng:
            for cy in rng:
                if (cx, cy) == (0, 0) or (cx == 0 and cy < 0) or cx < 0:
                    continue
                if offset_length(grid, (cx, cy)) < eps:
                    out.append((cx, cy))
    return out


@dataclass(frozen=True)
class BesovReport:
    """Semi-norm scan over beta plus the fitted regularity exponent."""

    p: float
    beta_grid: np.ndarray
    seminorms: np.ndarray
    fitted_alpha: float
    fit_residual: float
    shift_set: list[tuple[int, ...]] = dc_field(default_factory=list)
    degenerate: bool = False


def besov_report(
    field: ScalarField,
    p: float,
    beta_grid: list[float] | None = None,
    shift_set: list[tuple[int, ...]] | None = None,
) -> BesovReport:
    if beta_grid is None:
        beta_grid = [round(0.1 * k, 3) for k in range(1, 11)]
    if shift_set is None:
        shift_set = dyadic_shift_ladder(field.grid)
    fit = fit_regularity(field, p)
    sems = np.array([seminorm(field, b, p, shift_set) for b in beta_grid])
    # first differences cannot certify more than Lipschitz; cap the report
    alpha = fit.alpha if fit.degenerate else min(fit.alpha, 1.0)
    return BesovReport(
        p, np.asarray(beta_grid), sems, alpha, fit.residual, sorted(shift_set),
        fit.degenerate,
    )


def fit_time_regularity(snapshots: np.ndarray, dt: float, p: float) -> RegularityFit:
    """Regularity of a snapshot stack along its (non-periodic) time axis.

    ``snapshots`` has shape (n_times, n_cells...); differences are taken over
    the overlapping time window, so no periodicity in time is assumed.
    """
    snaps = np.asarray(snapshots, dtype=float)
    nt = snaps.shape[0]
    steps = [2**k for k in range(int(math.log2(max(1, nt // 4))) + 1)]
    hs, norms = [], []
    for c in steps:
        diff = snaps[c:] - snaps[:-c]
        hs.append(c * dt)
        norms.append(float(np.sqrt(np.mean(diff**2))) if p == 2 else
                     float(np.mean(np.abs(diff) ** p) ** (1.0 / p)))
    hs_arr, norms_arr = np.array(hs), np.array(norms)
    if np.min(norms_arr) == 0.0:
        return RegularityFit(math.inf, 0.0, hs_arr, norms_arr, slice(0, 0), degenerate=True)
    win = _asymptotic_window(len(hs_arr))
    slope, resid = _loglog_fit(hs_arr[win], norms_arr[win])
    return RegularityFit(slope, resid, hs_arr, norms_arr, win)

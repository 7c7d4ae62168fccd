"""Relative entropy between a candidate flow and a regular reference flow.

The density splits into a kinetic part and a thermodynamic part,

    E = |m - rho*u_ref|^2 / (2 rho)
      + rho * c_V * (Theta - T - T log(Theta / T))
      + T * (rho log(rho / r) - rho + r),

an algebraic rearrangement of the linearized ballistic free energy that
makes nonnegativity explicit: both bracketed factors are Bregman gaps of
convex functions, zero exactly at state equality.  The candidate temperature
Theta is recovered from (rho, S); the reference temperature enters directly.

On top of the pointwise density sit the coercivity-gap check (quadratic
lower bound with a constant calibrated per state box) and the Gronwall
monitor that tracks the integral of E between two trajectories against the
budget built from the reference's one-sided Lipschitz constant and its
temperature gradients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .conditions import oslip_discrete
from .errors import DomainError
from .grid import PeriodicGrid
from .solver import Snapshot, Trajectory, snapshot_primitive
from .thermo import (
    EntropicState,
    GasParams,
    PrimitiveState,
    entropy,
    theta_of,
)

#: Structural factor turning measured W^{1,inf} temperature data into the
#: thermodynamic Gronwall constant.  Heuristic: the continuum constants are
#: known to exist but carry no explicit form, so the factor was calibrated
#: once on the double-rarefaction refinement family (worst observed need
#: 0.7) and frozen with headroom.
KAPPA_STRUCT = 5.0

#: Intervals with integral below this floor are skipped, not ratioed.
INTEGRAL_FLOOR = 1e-14


def _bregman_temperature(theta_cand, t_ref):
    # w - 1 - log(w) >= 0; clamp shields the ulp-level cancellation at w = 1
    d = theta_cand / t_ref - 1.0
    return np.maximum(d - np.log1p(d), 0.0)


def _bregman_density(rho, r_ref):
    w = rho / r_ref
    return np.maximum(w * np.log(w) - w + 1.0, 0.0)


@dataclass(frozen=True)
class RelEntropyDensity:
    kinetic: np.ndarray
    thermo: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.kinetic + self.thermo


def rel_entropy_terms(rho, mom, theta_cand, r_ref, u_ref, t_ref,
                      params: GasParams) -> RelEntropyDensity:
    """Pointwise relative entropy with the candidate temperature given.

    Vector momenta/velocities carry the component axis first.  Equal inputs
    produce an exact floating-point zero.
    """
    rho = np.asarray(rho, dtype=float)
    mom = np.asarray(mom, dtype=float)
    t_ref = np.asarray(t_ref, dtype=float)
    if np.min(rho) <= 0.0 or np.min(np.asarray(theta_cand)) <= 0.0:
        raise DomainError("candidate density and temperature must be positive")
    if np.min(np.asarray(r_ref)) <= 0.0 or np.min(t_ref) <= 0.0:
        raise DomainError("reference density and temperature must be positive")
    slip = mom - rho * np.asarray(u_ref, dtype=float)
    slip_sq = slip * slip if slip.ndim == rho.ndim else np.sum(slip * slip, axis=0)
    kinetic = 0.5 * slip_sq / rho
    thermo = params.cv * rho * t_ref * _bregman_temperature(theta_cand, t_ref)
    thermo = thermo + t_ref * np.asarray(r_ref, dtype=float) * _bregman_density(
        rho, np.asarray(r_ref, dtype=float)
    )
    return RelEntropyDensity(kinetic, thermo)


def rel_entropy_density(state: EntropicState, ref: PrimitiveState,
                        params: GasParams) -> RelEntropyDensity:
    """Relative entropy of an entropic-variable state against a reference."""
    theta_cand = theta_of(state.rho, state.total_entropy, params)
    return rel_entropy_terms(
        state.rho, state.mom, theta_cand, ref.rho, ref.vel, ref.theta, params
    )


# ---------------------------------------------------------------------------
# coercivity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StateBox:
    """Admissible (rho, theta) rectangle for both states."""

    rho_min: float
    rho_max: float
    theta_min: float
    theta_max: float

    def contains(self, rho, theta) -> bool:
        return bool(
            np.min(rho) >= self.rho_min
            and np.max(rho) <= self.rho_max
            and np.min(theta) >= self.theta_min
            and np.max(theta) <= self.theta_max
        )


@dataclass(frozen=True)
class CoercivityCalibration:
    box: StateBox
    c_hat: float        # quadratic branch constant, 0.9 x sampled min ratio
    c_far: float        # unbounded branch constant, same rule outside 2x box
    n_samples: int
    seed: int


def _quadratic_form(rho, vel_cand, theta_cand, r_ref, u_ref, t_ref):
    return (
        0.5 * rho * (vel_cand - u_ref) ** 2
        + (rho - r_ref) ** 2
        + (theta_cand - t_ref) ** 2
    )


def _far_form(rho, vel_cand, theta_cand, r_ref, u_ref, params):
    s = entropy(rho, theta_cand, params)
    e = params.cv * theta_cand
    return 0.5 * rho * (vel_cand - u_ref) ** 2 + 1.0 + np.abs(rho * s) + e


def calibrate_coercivity(box: StateBox, params: GasParams, n: int = 2**17,
                         seed: int = 20240 ) -> CoercivityCalibration:
    """Freeze coercivity constants by Sobol-sampling state pairs.

    The quadratic constant is 0.9 times the sampled minimum of E over the
    quadratic form for in-box pairs; the far constant repeats the rule with
    the candidate pushed outside twice the box (reference still inside).
    """
    eng = qmc.Sobol(d=6, scramble=True, seed=seed)
    u01 = eng.random(n)
    lo = np.array([box.rho_min, box.theta_min, -1.0, box.rho_min, box.theta_min, -1.0])
    hi = np.array([box.rho_max, box.theta_max, 1.0, box.rho_max, box.theta_max, 1.0])
    s = lo + u01 * (hi - lo)
    rho, theta_c, vel_c, r_ref, t_ref, u_ref = s.T
    dens = rel_entropy_terms(rho, rho * vel_c, theta_c, r_ref, u_ref, t_ref, params)
    quad = _quadratic_form(rho, vel_c, theta_c, r_ref, u_ref, t_ref)
    mask = quad > 1e-30
    c_hat = 0.9 * float(np.min(dens.total[mask] / quad[mask]))

    # far branch: candidate outside twice the box, reference in box
    eng2 = qmc.Sobol(d=6, scramble=True, seed=seed + 1)
    u01 = eng2.random(n)
    rho_f = np.where(u01[:, 0] < 0.5,
                     box.rho_min * 0.5 * (0.2 + 1.6 * u01[:, 1]),
                     box.rho_max * 2.0 * (1.0 + 4.0 * u01[:, 1]))
    th_f = np.where(u01[:, 2] < 0.5,
                    box.theta_min * 0.5 * (0.2 + 1.6 * u01[:, 3]),
                    box.theta_max * 2.0 * (1.0 + 4.0 * u01[:, 3]))
    vel_f = -1.0 + 2.0 * u01[:, 4]
    r_ref = box.rho_min + (box.rho_max - box.rho_min) * u01[:, 5]
    t_ref = box.theta_min + (box.theta_max - box.theta_min) * u01[:, 0]
    u_ref = 1.0 - 2.0 * u01[:, 1]
    dens_f = rel_entropy_terms(rho_f, rho_f * vel_f, th_f, r_ref, u_ref, t_ref, params)
    far = _far_form(rho_f, vel_f, th_f, r_ref, u_ref, params)
    c_far = 0.9 * float(np.min(dens_f.total / far))
    return CoercivityCalibration(box, c_hat, c_far, n, seed)


@dataclass(frozen=True)
class CoercivityResult:
    branch: str            # "quadratic" inside the box, "far" outside
    gap: np.ndarray        # E - c * lower-bound form, pointwise
    c_used: float
    lower_form: np.ndarray


def coercivity_gap(state: EntropicState, ref: PrimitiveState,
                   calibration: CoercivityCalibration,
                   params: GasParams) -> CoercivityResult:
    """Pointwise gap E - C * (coercive lower-bound form).

    In-box pairs are held against the quadratic form with the calibrated
    constant; a candidate leaving the box is reported against the unbounded
    branch instead of raising.
    """
    theta_cand = theta_of(state.rho, state.total_entropy, params)
    if not calibration.box.contains(ref.rho, ref.theta):
        raise DomainError("reference state leaves the calibration box")
    dens = rel_entropy_terms(
        state.rho, state.mom, theta_cand, ref.rho, ref.vel, ref.theta, params
    )
    vel_cand = state.mom / state.rho
    if calibration.box.contains(state.rho, theta_cand):
        form = _quadratic_form(state.rho, vel_cand, theta_cand, ref.rho, ref.vel, ref.theta)
        c = calibration.c_hat
        branch = "quadratic"
    else:
        form = _far_form(state.rho, vel_cand, theta_cand, ref.rho, ref.vel, params)
        c = calibration.c_far
        branch = "far"
    return CoercivityResult(branch, dens.total - c * form, c, form)


# ---------------------------------------------------------------------------
# trajectory-level monitor
# ---------------------------------------------------------------------------


def rel_entropy_total(grid: PeriodicGrid, cand: Snapshot, ref: Snapshot,
                      params: GasParams) -> float:
    """Integral over the domain of the relative entropy density.

    The candidate snapshot is read in entropic variables (its temperature is
    recovered through the (rho, S) map); the reference enters primitively.
    """
    if cand.rho.shape != grid.shape or ref.rho.shape != grid.shape:
        raise ValueError("snapshots do not live on the given grid")
    c_rho, c_vel, c_theta = snapshot_primitive(cand, params)
    s_tot = c_rho * entropy(c_rho, c_theta, params)
    theta_cand = theta_of(c_rho, s_tot, params)
    r_rho, r_vel, r_theta = snapshot_primitive(ref, params)
    dens = rel_entropy_terms(c_rho, cand.mom, theta_cand, r_rho, r_vel, r_theta, params)
    return grid.cell_volume * float(math.fsum(dens.total.ravel()))


@dataclass
class RelEntropyTrace:
    times: np.ndarray
    integral: np.ndarray       # integral of E at each time
    oslip_c: np.ndarray        # one-sided Lipschitz constant of the reference
    k_thermo: np.ndarray       # heuristic thermodynamic constant
    fitted_k: np.ndarray       # per-interval growth rate, NaN where skipped
    skipped: np.ndarray        # intervals with integral below the floor
    kappa: float
    heuristic: bool = True     # k_thermo is a measured stand-in, not a theorem

    @property
    def budget(self) -> np.ndarray:
        return np.maximum(self.oslip_c, 0.0) + self.k_thermo


def gronwall_monitor(traj_a: Trajectory, traj_b: Trajectory, params: GasParams,
                     sigma: float | None = None,
                     kappa: float = KAPPA_STRUCT) -> RelEntropyTrace:
    """Track integral E(a | b) and the Gronwall budget of the reference b.

    Both trajectories must share grid and snapshot times.  The reported
    window starts at ``sigma`` (default: two snapshot strides in, mirroring
    the vanishing-initial-layer convention).
    """
    if traj_a.grid != traj_b.grid:
        raise ValueError("trajectories live on different grids")
    ta, tb = traj_a.times, traj_b.times
    if len(ta) != len(tb) or any(abs(x - y) > 1e-12 for x, y in zip(ta, tb)):
        raise ValueError("trajectories carry different snapshot times")
    grid = traj_a.grid
    if sigma is None:
        stride = ta[1] - ta[0] if len(ta) > 1 else 0.0
        sigma = ta[0] + 2.0 * stride
    keep = [i for i, t in enumerate(ta) if t >= sigma - 1e-12]
    times = np.array([ta[i] for i in keep])
    integral = np.array(
        [
            rel_entropy_total(grid, traj_a.snapshots[i], traj_b.snapshots[i], params)
            for i in keep
        ]
    )
    oslip = []
    w1inf = []
    for j, i in enumerate(keep):
        _, vel, theta = snapshot_primitive(traj_b.snapshots[i], params)
        oslip.append(oslip_discrete(grid, vel).value)
        grad_sup = max(
            float(np.max(np.abs(np.roll(theta, -1, axis=ax) - theta))) / grid.cell_width
            for ax in range(grid.dims)
        )
        if j > 0:
            _, _, theta_prev = snapshot_primitive(traj_b.snapshots[keep[j - 1]], params)
            dt_loc = times[j] - times[j - 1]
            time_sup = float(np.max(np.abs(theta - theta_prev))) / dt_loc
        else:
            time_sup = 0.0
        w1inf.append(max(grad_sup, time_sup))
    oslip_c = np.array(oslip)
    k_thermo = kappa * np.array(w1inf)
    fitted = np.full(len(times), np.nan)
    skipped = np.zeros(len(times), dtype=bool)
    for j in range(1, len(times)):
        dt_loc = times[j] - times[j - 1]
        mean = 0.5 * (integral[j] + integral[j - 1]) * dt_loc
        if mean < INTEGRAL_FLOOR:
            skipped[j] = True
            continue
        fitted[j] = (integral[j] - integral[j - 1]) / mean
    return RelEntropyTrace(times, integral, oslip_c, k_thermo, fitted, skipped, kappa)


@dataclass(frozen=True)
class GronwallCheck:
    ok: bool
    utilization: float          # max of E(t) / envelope(t), 1.0 is the limit
    times: np.ndarray
    envelope: np.ndarray


def gronwall_envelope_check(trace: RelEntropyTrace, sigma: float,
                            margin: float = 0.0) -> GronwallCheck:
    """Verify E(t) <= E(sigma) * exp(integral of budget) on [sigma, T]."""
    mask = trace.times >= sigma - 1e-12
    times = trace.times[mask]
    values = trace.integral[mask]
    budget = trace.budget[mask] + margin
    envelope = np.empty_like(values)
    envelope[0] = values[0]
    acc = 0.0
    for j in range(1, len(times)):
        acc += 0.5 * (budget[j] + budget[j - 1]) * (times[j] - times[j - 1])
        envelope[j] = values[0] * math.exp(acc)
    # the ratio at sigma itself is identically one; report the later max
    if len(values) > 1:
        util = float(np.max(values[1:] / envelope[1:]))
    else:
        util = 1.0
    return GronwallCheck(bool(util <= 1.0), util, times, envelope)


def j1_term(grid: PeriodicGrid, cand: Snapshot, ref: Snapshot,
            params: GasParams, mask: np.ndarray | None = None) -> float:
    """Diagnostic integral rho (u - v) tensor (v - u) : grad v.

    The velocity-gradient coupling term of the stability budget; bounded by
    oslip_C(t) times the relative entropy integral where the reference is
    genuinely one-sidedly Lipschitz.  ``mask`` restricts the integral, e.g.
    to exclude the compressive wrap jumps of periodically embedded profiles
    (a discrete reference violates the shock-free assumption there).
    """
    c_rho, c_vel, _ = snapshot_primitive(cand, params)
    _, r_vel, _ = snapshot_primitive(ref, params)
    dx = grid.cell_width
    total = 0.0
    for i in range(grid.dims):
        for j in range(grid.dims):
            dv = (np.roll(r_vel[i], -1, axis=j) - np.roll(r_vel[i], 1, axis=j)) / (2 * dx)
            w_i = c_vel[i] - r_vel[i]
            w_j = c_vel[j] - r_vel[j]
            cell = -c_rho * w_i * w_j * dv
            if mask is not None:
                cell = cell[mask]
            total += float(math.fsum(cell.ravel()))
    return grid.cell_volume * total

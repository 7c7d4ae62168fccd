"""Ideal-gas thermodynamic closure.

Pressure obeys p = rho * theta, the internal energy is e = c_V * theta with
c_V * (gamma - 1) = 1, and the specific entropy is

    s(rho, theta) = c_V * log(theta) - log(rho).

On top of the closures this module provides the ballistic free energy
H_T(rho, theta) = rho*e - T*rho*s, the (rho, S) reparametrization of the
temperature, the pressure as a convex function of (rho, S) with closed-form
gradient and Hessian, and residual checks for the differential identities the
closure satisfies.  All derivatives are closed-form; central differences are
offered only as an independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, RangeError

#: Densities/temperatures below this are treated as vacuum and rejected.
POSITIVE_FLOOR = 1e-12

#: Exponent cap for the exponential reparametrization theta_of.
_EXP_CAP = 700.0


@dataclass(frozen=True)
class GasParams:
    """Adiabatic index of the gas; the specific heat c_V is derived.

    Parameters
    ----------
    gamma : float
        Adiabatic index, must exceed 1.

    Attributes
    ----------
    cv : float
        Specific heat at constant volume, fixed by cv * (gamma - 1) = 1.
    """

    gamma: float = 1.4

    def __post_init__(self) -> None:
        if not np.isfinite(self.gamma) or self.gamma <= 1.0:
            raise DomainError(f"adiabatic index must be > 1, got {self.gamma}")

    @property
    def cv(self) -> float:
        return 1.0 / (self.gamma - 1.0)


def _require_positive(name: str, value) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.size == 0 or not np.all(np.isfinite(arr)) or np.min(arr) < POSITIVE_FLOOR:
        bad = None if arr.size == 0 else np.min(arr)
        raise DomainError(f"{name} must be positive (>= {POSITIVE_FLOOR:g}), got min {bad}")
    return arr


def pressure(rho, theta, params: GasParams):
    """Thermal pressure p = rho * theta."""
    rho = _require_positive("rho", rho)
    theta = _require_positive("theta", theta)
    return rho * theta


def pressure_drho(rho, theta, params: GasParams):
    """d p / d rho at fixed theta."""
    _require_positive("rho", rho)
    return np.asarray(theta, dtype=float) + 0.0 * np.asarray(rho, dtype=float)


def pressure_dtheta(rho, theta, params: GasParams):
    """d p / d theta at fixed rho."""
    _require_positive("theta", theta)
    return np.asarray(rho, dtype=float) + 0.0 * np.asarray(theta, dtype=float)


def internal_energy(theta, params: GasParams):
    """Specific internal energy e = c_V * theta."""
    theta = _require_positive("theta", theta)
    return params.cv * theta


def entropy(rho, theta, params: GasParams):
    """Specific entropy s = c_V * log(theta) - log(rho)."""
    rho = _require_positive("rho", rho)
    theta = _require_positive("theta", theta)
    return params.cv * np.log(theta) - np.log(rho)


def entropy_drho(rho, theta, params: GasParams):
    """d s / d rho = -1 / rho."""
    rho = _require_positive("rho", rho)
    return -1.0 / rho


def entropy_dtheta(rho, theta, params: GasParams):
    """d s / d theta = c_V / theta."""
    theta = _require_positive("theta", theta)
    return params.cv / theta


def sound_speed(rho, theta, params: GasParams):
    """Adiabatic sound speed c = sqrt(gamma * theta)."""
    theta = _require_positive("theta", theta)
    return np.sqrt(params.gamma * theta)


def ballistic_free_energy(rho, theta, t_ref, params: GasParams):
    """Ballistic free energy H_T(rho, theta) = rho*e(theta) - T*rho*s(rho, theta)."""
    rho = _require_positive("rho", rho)
    theta = _require_positive("theta", theta)
    t_ref = _require_positive("t_ref", t_ref)
    return rho * internal_energy(theta, params) - t_ref * rho * entropy(rho, theta, params)


def ballistic_drho(rho, t_ref, params: GasParams):
    """d H_T / d rho evaluated on the diagonal theta = T.

    Closed form c_V*T - T*s(rho, T) + T; satisfies rho * dH = H + p.
    """
    rho = _require_positive("rho", rho)
    t_ref = _require_positive("t_ref", t_ref)
    return params.cv * t_ref - t_ref * entropy(rho, t_ref, params) + t_ref


def theta_of(rho, total_entropy, params: GasParams):
    """Temperature recovered from density and total entropy S = rho*s.

    Theta(rho, S) = rho**(gamma-1) * exp((gamma-1) * S / rho), which inverts
    S = rho * entropy(rho, Theta).

    Raises
    ------
    DomainError
        If rho is not positive.
    RangeError
        If the exponential overflows; the message reports the offending
        exponent.
    """
    rho = _require_positive("rho", rho)
    total_entropy = np.asarray(total_entropy, dtype=float)
    a = params.gamma - 1.0
    exponent = a * (np.log(rho) + total_entropy / rho)
    worst = np.max(exponent)
    if worst > _EXP_CAP:
        raise RangeError(
            f"temperature reparametrization overflows: exponent {worst:.3g} > {_EXP_CAP:g}"
        )
    return np.exp(exponent)


def tilde_pressure(rho, total_entropy, params: GasParams):
    """Pressure in the (rho, S) variables: rho**gamma * exp((gamma-1)*S/rho)."""
    return pressure(rho, theta_of(rho, total_entropy, params), params)


def tilde_pressure_derivatives(rho, total_entropy, params: GasParams):
    """Value, gradient and Hessian of the (rho, S) pressure, closed form.

    Returns
    -------
    value : ndarray
    grad : ndarray
        Stacked (d/drho, d/dS) along the first axis.
    hess : ndarray
        Stacked 2x2 symmetric Hessian along the first two axes.  Its
        determinant is (gamma-1)**3 * rho**(2*gamma-4) * exp(...)**2 > 0, so
        the matrix is positive definite for rho > 0.
    """
    rho = _require_positive("rho", rho)
    s_tot = np.asarray(total_entropy, dtype=float)
    g = params.gamma
    a = g - 1.0
    w = s_tot / rho
    expf = np.exp(a * w)
    value = rho**g * expf
    p_r = rho ** (g - 1.0) * expf * (g - a * w)
    p_s = a * rho ** (g - 1.0) * expf
    p_rr = a * rho ** (g - 2.0) * expf * (g - 2.0 * a * w + a * w * w)
    p_rs = a * a * rho ** (g - 2.0) * expf * (1.0 - w)
    p_ss = a * a * rho ** (g - 2.0) * expf
    grad = np.stack([p_r, p_s])
    hess = np.stack([np.stack([p_rr, p_rs]), np.stack([p_rs, p_ss])])
    return value, grad, hess


def verify_gibbs(rho, theta, params: GasParams, fd_step: float | None = None):
    """Residuals of the thermodynamic compatibility identity.

    Checks |theta * ds/drho - (de/drho - p/rho**2)| and
    |theta * ds/dtheta - de/dtheta|, using the closed-form derivatives, or
    central differences of step ``fd_step`` when given (residual then decays
    as O(fd_step**2)).
    """
    rho = _require_positive("rho", rho)
    theta = _require_positive("theta", theta)
    p = pressure(rho, theta, params)
    if fd_step is None:
        ds_r = entropy_drho(rho, theta, params)
        ds_t = entropy_dtheta(rho, theta, params)
        de_r = np.zeros_like(rho * theta)
        de_t = params.cv + 0.0 * theta
    else:
        h = float(fd_step)
        ds_r = (entropy(rho + h, theta, params) - entropy(rho - h, theta, params)) / (2 * h)
        ds_t = (entropy(rho, theta + h, params) - entropy(rho, theta - h, params)) / (2 * h)
        de_r = np.zeros_like(rho * theta)  # e carries no rho dependence
        de_t = (internal_energy(theta + h, params) - internal_energy(theta - h, params)) / (2 * h)
    res1 = np.abs(theta * ds_r - (de_r - p / rho**2))
    res2 = np.abs(theta * ds_t - de_t)
    return res1, res2


def verify_p2(r, t_ref, params: GasParams, fd_step: float | None = None):
    """Residuals of the three ballistic free-energy identities.

    1. r * dH/dr - (H + p)
    2. r * ds/dr + (1/r) * dp/dT
    3. dH/dT + r * s

    Closed-form residuals are zero up to rounding; with ``fd_step`` the
    derivatives are replaced by central differences.
    """
    r = _require_positive("r", r)
    t_ref = _require_positive("t_ref", t_ref)
    h_val = ballistic_free_energy(r, t_ref, t_ref, params)
    p = pressure(r, t_ref, params)
    s = entropy(r, t_ref, params)
    if fd_step is None:
        dh_r = ballistic_drho(r, t_ref, params)
        ds_r = entropy_drho(r, t_ref, params)
        dp_t = pressure_dtheta(r, t_ref, params)
        dh_t = -r * s
    else:
        h = float(fd_step)
        dh_r = (
            ballistic_free_energy(r + h, t_ref, t_ref, params)
            - ballistic_free_energy(r - h, t_ref, t_ref, params)
        ) / (2 * h)
        ds_r = (entropy(r + h, t_ref, params) - entropy(r - h, t_ref, params)) / (2 * h)
        dp_t = (pressure(r, t_ref + h, params) - pressure(r, t_ref - h, params)) / (2 * h)
        # both the subscript parameter and the evaluation point move with T
        dh_t = (
            ballistic_free_energy(r, t_ref + h, t_ref + h, params)
            - ballistic_free_energy(r, t_ref - h, t_ref - h, params)
        ) / (2 * h)
    res1 = np.abs(r * dh_r - (h_val + p))
    res2 = np.abs(r * ds_r + dp_t / r)
    res3 = np.abs(dh_t + r * s)
    return res1, res2, res3


# ---------------------------------------------------------------------------
# state vectors and conversions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PrimitiveState:
    """Density, velocity and temperature.

    ``vel`` carries the component axis first, so a single point in N
    dimensions has shape (N,) and a field has shape (N, *grid shape).
    """

    rho: np.ndarray
    vel: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rho", _require_positive("rho", self.rho))
        object.__setattr__(self, "vel", np.asarray(self.vel, dtype=float))
        object.__setattr__(self, "theta", _require_positive("theta", self.theta))


@dataclass(frozen=True)
class ConservedState:
    """Density, momentum and total energy density E = rho*|u|^2/2 + rho*e."""

    rho: np.ndarray
    mom: np.ndarray
    energy: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rho", _require_positive("rho", self.rho))
        object.__setattr__(self, "mom", np.asarray(self.mom, dtype=float))
        object.__setattr__(self, "energy", np.asarray(self.energy, dtype=float))


@dataclass(frozen=True)
class EntropicState:
    """Density, momentum and total entropy S = rho * s(rho, theta)."""

    rho: np.ndarray
    mom: np.ndarray
    total_entropy: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rho", _require_positive("rho", self.rho))
        object.__setattr__(self, "mom", np.asarray(self.mom, dtype=float))
        object.__setattr__(self, "total_entropy", np.asarray(self.total_entropy, dtype=float))


def _speed_sq(vec) -> np.ndarray:
    vec = np.asarray(vec, dtype=float)
    if vec.ndim == 0:
        return vec * vec
    return np.sum(vec * vec, axis=0)


def total_energy(state: PrimitiveState, params: GasParams):
    """E = rho*|u|^2/2 + rho*e(theta)."""
    return 0.5 * state.rho * _speed_sq(state.vel) + state.rho * internal_energy(
        state.theta, params
    )


def primitive_to_conserved(state: PrimitiveState, params: GasParams) -> ConservedState:
    return ConservedState(state.rho, state.rho * state.vel, total_energy(state, params))


def conserved_to_primitive(state: ConservedState, params: GasParams) -> PrimitiveState:
    vel = state.mom / state.rho
    kinetic = 0.5 * state.rho * _speed_sq(vel)
    theta = (state.energy - kinetic) / (state.rho * params.cv)
    return PrimitiveState(state.rho, vel, theta)


def primitive_to_entropic(state: PrimitiveState, params: GasParams) -> EntropicState:
    s_tot = state.rho * entropy(state.rho, state.theta, params)
    return EntropicState(state.rho, state.rho * state.vel, s_tot)


def entropic_to_primitive(state: EntropicState, params: GasParams) -> PrimitiveState:
    theta = theta_of(state.rho, state.total_entropy, params)
    return PrimitiveState(state.rho, state.mom / state.rho, theta)

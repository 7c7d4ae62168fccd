"""Weak-form and entropy-inequality residuals of computed trajectories.

Each balance law is tested against smooth space-time test functions: the
interior integral (state times time-derivative plus flux times gradient) is
compared with the boundary terms at the initial and final times.  Smooth
solutions drive the residual to zero at first order under refinement; the
entropy production (boundary minus interior for the entropy balance) must
stay above -O(dx) for an admissible scheme and is strictly positive across
shocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import PERIOD, PeriodicGrid
from .solver import Snapshot, Trajectory, snapshot_primitive
from .thermo import GasParams, entropy

Arrays = tuple[np.ndarray, ...]


@dataclass(frozen=True)
class SpaceTimeTest:
    """Smooth test function with closed-form time and space derivatives.

    ``value(t, X)``, ``dt(t, X)`` and ``grad(t, X)`` take the snapshot time
    and the tuple of coordinate arrays; grad returns component-first arrays.
    ``nonneg`` marks admissibility for entropy testing.
    """

    name: str
    value: Callable
    dt: Callable
    grad: Callable
    nonneg: bool = False


def _bump(s):
    val = np.zeros_like(s)
    der = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    si = s[inside]
    q = 1.0 - si * si
    val[inside] = np.exp(-1.0 / q)
    der[inside] = val[inside] * (-2.0 * si / (q * q))
    return val, der


def _wrap(d):
    return (d + PERIOD / 2.0) % PERIOD - PERIOD / 2.0


def _scalar_bump(s: float) -> tuple[float, float]:
    if abs(s) >= 1.0:
        return 0.0, 0.0
    q = 1.0 - s * s
    v = math.exp(-1.0 / q)
    return v, v * (-2.0 * s / (q * q))


def time_bump(t0: float, t1: float) -> tuple[Callable, Callable]:
    """Smooth bump supported in (t0, t1) and its derivative."""
    mid, half = 0.5 * (t0 + t1), 0.5 * (t1 - t0)

    def val(t):
        return _scalar_bump((t - mid) / half)[0]

    def der(t):
        return _scalar_bump((t - mid) / half)[1] / half

    return val, der


def bump_test(center, width: float, t0: float, t1: float,
              nonneg: bool = True) -> SpaceTimeTest:
    """Tensor bump in space times a bump in time, compact in (t0, t1)."""
    centers = np.atleast_1d(np.asarray(center, dtype=float))
    tval, tder = time_bump(t0, t1)

    def space(X):
        vals, ders = [], []
        for ax, x in enumerate(X):
            v, d = _bump(_wrap(x - centers[ax]) / width)
            vals.append(v)
            ders.append(d / width)
        total = vals[0]
        for v in vals[1:]:
            total = total * v
        grads = []
        for ax in range(len(X)):
            g = ders[ax]
            for other in range(len(X)):
                if other != ax:
                    g = g * vals[other]
            grads.append(g)
        return total, np.stack(grads)

    return SpaceTimeTest(
        f"bump(c={tuple(centers)!r},w={width},t=({t0},{t1}))",
        lambda t, X: tval(t) * space(X)[0],
        lambda t, X: tder(t) * space(X)[0],
        lambda t, X: tval(t) * space(X)[1],
        nonneg,
    )


def trig_test(k: int = 1, t0: float | None = None, t1: float | None = None) -> SpaceTimeTest:
    """cos(k pi x) profile, constant in time unless a time bump is given."""
    if t0 is None:
        tval, tder = (lambda t: 1.0), (lambda t: 0.0)
        label = f"trig(k={k})"
    else:
        tval, tder = time_bump(t0, t1)
        label = f"trig(k={k},t=({t0},{t1}))"

    def value(t, X):
        return tval(t) * np.cos(k * np.pi * X[0])

    def dt(t, X):
        return tder(t) * np.cos(k * np.pi * X[0])

    def grad(t, X):
        g = [-k * np.pi * tval(t) * np.sin(k * np.pi * X[0])]
        for x in X[1:]:
            g.append(np.zeros_like(x))
        return np.stack(g)

    return SpaceTimeTest(label, value, dt, grad, nonneg=False)


def _integrate_cells(values: np.ndarray, vol: float) -> float:
    return vol * math.fsum(values.ravel())


def _time_trapezoid(times, series) -> float:
    total = 0.0
    for j in range(1, len(times)):
        total += 0.5 * (series[j] + series[j - 1]) * (times[j] - times[j - 1])
    return total


def _fields(snap: Snapshot, params: GasParams, which: str):
    """(density q, flux rows) of the tested balance law at one snapshot."""
    rho, vel, theta = snapshot_primitive(snap, params)
    if which == "mass":
        return rho, snap.mom
    if which.startswith("momentum"):
        suffix = which[len("momentum"):]
        i = int(suffix) - 1 if suffix else 0
        p = rho * theta
        flux = np.stack([snap.mom[i] * vel[ax] for ax in range(vel.shape[0])])
        flux[i] = flux[i] + p
        return snap.mom[i], flux
    if which == "energy":
        p = rho * theta
        return snap.energy, np.stack([(snap.energy + p) * vel[ax]
                                      for ax in range(vel.shape[0])])
    if which == "entropy":
        rs = rho * entropy(rho, theta, params)
        return rs, np.stack([rs * vel[ax] for ax in range(vel.shape[0])])
    raise ValueError(f"unknown balance law {which!r}")


def _central_gradient(values: np.ndarray, dx: float) -> np.ndarray:
    comps = [
        (np.roll(values, -1, axis=ax) - np.roll(values, 1, axis=ax)) / (2.0 * dx)
        for ax in range(values.ndim)
    ]
    return np.stack(comps)


def weak_residual(traj: Trajectory, test: SpaceTimeTest, which: str,
                  params: GasParams | None = None) -> float:
    """Interior weak integral minus boundary terms for one balance law.

    Midpoint quadrature in space over cells; the time-derivative term pairs
    each snapshot interval with the exact increment of the test function, so
    it telescopes against the boundary terms, and the flux term contracts
    against the lattice gradient of the test samples, so constant fluxes
    cancel by periodic telescoping.  Constant states therefore give residuals
    at rounding level, and smooth flows at quadrature order.
    """
    params = params or traj.params
    grid = traj.grid
    X = grid.coordinates()
    vol = grid.cell_volume
    times = traj.times
    phis = [test.value(t, X) * np.ones(grid.shape) for t in times]
    qs, flux_series = [], []
    for snap in traj.snapshots:
        q, flux = _fields(snap, params, which)
        qs.append(q)
        gphi = _central_gradient(phis[len(qs) - 1], grid.cell_width)
        integrand = np.zeros(grid.shape)
        for ax in range(grid.dims):
            integrand = integrand + flux[ax] * gphi[ax]
        flux_series.append(_integrate_cells(integrand, vol))
    interior = _time_trapezoid(times, flux_series)
    for j in range(1, len(times)):
        q_mid = 0.5 * (qs[j] + qs[j - 1])
        interior += _integrate_cells(q_mid * (phis[j] - phis[j - 1]), vol)
    boundary = _integrate_cells(qs[-1] * phis[-1], vol) - _integrate_cells(
        qs[0] * phis[0], vol
    )
    return interior - boundary


def entropy_production(traj: Trajectory, test: SpaceTimeTest,
                       params: GasParams | None = None) -> float:
    """Entropy balance surplus: boundary growth minus interior transport.

    Nonnegative (up to O(dx)) for admissible solutions, strictly positive for
    test bumps riding on a shock.
    """
    if not test.nonneg:
        raise ValueError("entropy testing requires a nonnegative test function")
    return -weak_residual(traj, test, "entropy", params)


def entropy_production_tol(grid: PeriodicGrid, c: float = 1.0) -> float:
    """Admissibility tolerance -c * dx for the production sign check."""
    return c * grid.cell_width


def shock_tracking_bumps(traj: Trajectory, count: int = 8,
                         width: float | None = None) -> list[SpaceTimeTest]:
    """Space bumps spread over the domain, time bump inside (0, T)."""
    t0, t1 = traj.times[0], traj.times[-1]
    tb0 = t0 + 0.2 * (t1 - t0)
    tb1 = t0 + 0.9 * (t1 - t0)
    if width is None:
        width = PERIOD / count
    tests = []
    for k in range(count):
        c = -1.0 + (k + 0.5) * PERIOD / count
        center = (c,) * traj.grid.dims if traj.grid.dims == 2 else (c,)
        tests.append(bump_test(center if traj.grid.dims == 2 else c, width, tb0, tb1))
    return tests

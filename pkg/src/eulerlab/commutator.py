"""Mollification commutators and their decay rates.

Two families are implemented.  The chain-rule commutator

    grad(G(F_eps)) - (grad G(F))_eps

for a C^2 map G of k scalar fields, with the one-sided bound

    sum_{|gamma|=2} eps**(sum_j gamma_j alpha_j - 1)
        * sup|d^gamma G| * prod_j |f_j|_{B^{alpha_j, inf}_p}**gamma_j

in L^{p/2}, together with its two-term split (value-difference term plus
pull-the-derivative-inside term, which sum to the commutator exactly).  And
the bilinear/trilinear product commutators

    rho_eps u_eps - (rho u)_eps,   rho_eps u_eps (x) u_eps - (rho u (x) u)_eps

whose L^{p/2} norms are checked against squared L^p mollification and shift
moduli with a constant frozen from a smooth calibration probe.

G is supplied with closed-form first and second derivatives; nothing here
differentiates G numerically, so the split terms telescope bit-exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from itertools import combinations_with_replacement
from typing import Callable, Sequence

import numpy as np

from .besov import dyadic_shift_ladder, seminorm, _asymptotic_window, _loglog_fit
from .errors import DomainError
from .grid import (
    Mollifier,
    PeriodicGrid,
    ScalarField,
    VectorField,
    build_mollifier,
    grad_values,
    lp_norm_values,
    mollify_values,
    shift_values,
)
from .thermo import GasParams, tilde_pressure_derivatives

#: Relative slack admitted when asserting the chain-commutator bound.
CHAIN_BOUND_SLACK = 0.10

#: Frozen constant for the product-commutator inequality; calibrated once on
#: a smooth probe (max measured ratio 0.21 across bilinear/trilinear scans).
C0_PRODUCT = 0.25

#: Sample count per component axis when taking sup|d^gamma G| over the hull.
HULL_SAMPLES_PER_DIM = 1000


@dataclass(frozen=True)
class GMap:
    """C^2 map of k scalar arguments with closed-form derivatives.

    ``value``, ``grad`` and ``hess`` act on a stacked array Y of shape
    (k, ...); grad returns shape (k, ...) and hess (k, k, ...).
    """

    name: str
    arity: int
    value: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    hess: Callable[[np.ndarray], np.ndarray]


def gmap_square() -> GMap:
    return GMap(
        "square",
        1,
        lambda y: y[0] ** 2,
        lambda y: np.stack([2.0 * y[0]]),
        lambda y: np.stack([np.stack([2.0 + 0.0 * y[0]])]),
    )


def gmap_product() -> GMap:
    zero = lambda y: 0.0 * y[0]
    return GMap(
        "product",
        2,
        lambda y: y[0] * y[1],
        lambda y: np.stack([y[1], y[0]]),
        lambda y: np.stack(
            [np.stack([zero(y), 1.0 + zero(y)]), np.stack([1.0 + zero(y), zero(y)])]
        ),
    )


def gmap_pressure_tilde(params: GasParams) -> GMap:
    """Pressure as a function of (rho, S); convex with closed-form Hessian."""

    def value(y):
        return tilde_pressure_derivatives(y[0], y[1], params)[0]

    def gradf(y):
        return tilde_pressure_derivatives(y[0], y[1], params)[1]

    def hessf(y):
        return tilde_pressure_derivatives(y[0], y[1], params)[2]

    return GMap("pressure_tilde", 2, value, gradf, hessf)


def get_gmap(name: str, params: GasParams | None = None) -> GMap:
    if name == "square":
        return gmap_square()
    if name == "product":
        return gmap_product()
    if name == "pressure_tilde":
        return gmap_pressure_tilde(params if params is not None else GasParams())
    raise ValueError(f"unknown G map {name!r}; known: square, product, pressure_tilde")


@dataclass(frozen=True)
class CommutatorProbe:
    """Fields with declared regularities, a G map, and a mollification scan.

    ``hull`` is the coordinate box (lo, hi) per component on which sup of
    the second derivatives of G is taken; it must contain the field ranges.
    ``window`` optionally restricts measurement to an interior sub-box given
    as per-axis cell slices; with margins of at least eps it mirrors the
    compactly-contained sub-domain convention, while None uses the whole
    periodic domain.
    """

    components: tuple[ScalarField, ...]
    alphas: tuple[float, ...]
    gmap: GMap
    p: float
    eps_range: tuple[float, ...]
    hull: tuple[tuple[float, float], ...] = ()
    window: tuple[slice, ...] | None = None
    shift_set: list[tuple[int, ...]] = dc_field(default_factory=list)

    def __post_init__(self):
        if len(self.components) != self.gmap.arity:
            raise ValueError("component count must match G arity")
        if len(self.alphas) != len(self.components):
            raise ValueError("one alpha per component required")
        if self.p < 2.0:
            raise DomainError(f"p must be >= 2, got {self.p}")
        grid = self.components[0].grid
        if any(f.grid != grid for f in self.components):
            raise ValueError("all components must share one grid")
        if not self.hull:
            pads = []
            for f in self.components:
                lo, hi = float(f.values.min()), float(f.values.max())
                pad = 1e-9 + 1e-9 * (hi - lo)
                pads.append((lo - pad, hi + pad))
            object.__setattr__(self, "hull", tuple(pads))
        for f, (lo, hi) in zip(self.components, self.hull):
            vmin, vmax = float(f.values.min()), float(f.values.max())
            if vmin < lo or vmax > hi:
                idx = int(np.argmin(f.values)) if vmin < lo else int(np.argmax(f.values))
                cell = np.unravel_index(idx, f.values.shape)
                raise DomainError(
                    f"field leaves the declared hull [{lo}, {hi}] at cell {cell}"
                )
        if not self.shift_set:
            object.__setattr__(self, "shift_set", dyadic_shift_ladder(grid))

    @property
    def grid(self) -> PeriodicGrid:
        return self.components[0].grid

    def seminorms(self) -> tuple[float, ...]:
        return tuple(
            seminorm(f, a, self.p, self.shift_set)
            for f, a in zip(self.components, self.alphas)
        )


def _second_derivative_sups(probe: CommutatorProbe) -> dict[tuple[int, ...], float]:
    """sup |d^gamma G| over the hull box, |gamma| = 2, by dense sampling."""
    k = probe.gmap.arity
    axes = [np.linspace(lo, hi, HULL_SAMPLES_PER_DIM) for lo, hi in probe.hull]
    mesh = np.meshgrid(*axes, indexing="ij") if k > 1 else [axes[0]]
    y = np.stack([m.ravel() for m in mesh])
    hess = probe.gmap.hess(y)
    sups: dict[tuple[int, ...], float] = {}
    for i, j in combinations_with_replacement(range(k), 2):
        gamma = [0] * k
        gamma[i] += 1
        gamma[j] += 1
        sups[tuple(gamma)] = float(np.max(np.abs(hess[i, j])))
    return sups


def chain_bound(probe: CommutatorProbe, eps: float, seminorms=None, sups=None) -> float:
    """sum over |gamma|=2 of eps**(gamma.alpha - 1) * sup|d^g G| * prod |f|^g."""
    if seminorms is None:
        seminorms = probe.seminorms()
    if sups is None:
        sups = _second_derivative_sups(probe)
    total = 0.0
    for gamma, sup in sups.items():
        if sup == 0.0:
            continue
        expo = sum(g * a for g, a in zip(gamma, probe.alphas)) - 1.0
        prod = math.prod(s**g for s, g in zip(seminorms, gamma))
        total += eps**expo * sup * prod
    return total


def _window_norm(values: np.ndarray, p: float, grid: PeriodicGrid,
                 window: tuple[slice, ...] | None) -> float:
    mag = values if values.ndim == grid.dims else np.sqrt(np.sum(values * values, axis=0))
    if window is not None:
        mag = mag[window]
    return lp_norm_values(mag, p, grid.cell_volume)


@dataclass(frozen=True)
class ChainCommutatorResult:
    eps: float
    commutator: VectorField
    term_a: VectorField
    term_b: VectorField
    norm: float
    norm_a: float
    norm_b: float
    bound: float


def chain_commutator(probe: CommutatorProbe, eps: float,
                     seminorms=None, sups=None) -> ChainCommutatorResult:
    """Evaluate grad(G(F_eps)) - (grad G(F))_eps and its split terms.

    Gradients of compositions are expanded with the closed-form chain rule,
    so commutator = term_a + term_b holds exactly:

        term_a = (DG(F_eps) - DG(F)) . grad F_eps
        term_b = DG(F) . grad F_eps - (DG(F) . grad F)_eps
    """
    grid = probe.grid
    mol = build_mollifier(grid, eps)
    f = np.stack([c.values for c in probe.components])
    fe = np.stack([mollify_values(c.values, mol) for c in probe.components])
    dg = probe.gmap.grad(f)
    dge = probe.gmap.grad(fe)
    grads = np.stack([grad_values(c.values, grid.cell_width) for c in probe.components])
    grads_e = np.stack([mollify_values(g, mol, first_axis=1) for g in grads])
    term_a = np.einsum("i...,id...->d...", dge - dg, grads_e)
    inner = np.einsum("i...,id...->d...", dg, grads)
    term_b = np.einsum("i...,id...->d...", dg, grads_e) - mollify_values(
        inner, mol, first_axis=1
    )
    comm = term_a + term_b
    q = probe.p / 2.0
    return ChainCommutatorResult(
        eps,
        VectorField(grid, comm),
        VectorField(grid, term_a),
        VectorField(grid, term_b),
        _window_norm(comm, q, grid, probe.window),
        _window_norm(term_a, q, grid, probe.window),
        _window_norm(term_b, q, grid, probe.window),
        chain_bound(probe, eps, seminorms, sups),
    )


def split_terms(probe: CommutatorProbe, eps: float) -> tuple[VectorField, VectorField]:
    res = chain_commutator(probe, eps)
    return res.term_a, res.term_b


@dataclass(frozen=True)
class RateFit:
    eps: np.ndarray
    norms: np.ndarray
    bounds: np.ndarray
    slope: float
    predicted: float
    fit_residual: float
    window: slice
    passed: bool
    bound_ok: np.ndarray
    slack: float = CHAIN_BOUND_SLACK


def chain_rate_fit(probe: CommutatorProbe, slack: float = CHAIN_BOUND_SLACK) -> RateFit:
    """Fit the decay slope of the commutator norm and compare to the bound.

    PASS requires slope >= (min active sum gamma.alpha) - 1 - 0.1 and the
    one-sided bound (with measured semi-norms and sampled derivative sups)
    to hold at every eps within the slack.
    """
    eps_arr = np.array(sorted(probe.eps_range))
    if eps_arr[-1] / eps_arr[0] < 7.9:
        raise ValueError("eps range must span at least 3 octaves")
    sems = probe.seminorms()
    sups = _second_derivative_sups(probe)
    norms, bounds = [], []
    for eps in eps_arr:
        res = chain_commutator(probe, float(eps), sems, sups)
        norms.append(res.norm)
        bounds.append(res.bound)
    norms_arr, bounds_arr = np.array(norms), np.array(bounds)
    active = [
        sum(g * a for g, a in zip(gamma, probe.alphas)) - 1.0
        for gamma, sup in sups.items()
        if sup > 0.0
    ]
    predicted = min(active) if active else math.inf
    win = _asymptotic_window(len(eps_arr))
    slope, resid = _loglog_fit(eps_arr[win], norms_arr[win])
    bound_ok = norms_arr <= (1.0 + slack) * bounds_arr
    passed = bool(slope >= predicted - 0.1 and np.all(bound_ok))
    return RateFit(eps_arr, norms_arr, bounds_arr, slope, predicted, resid, win,
                   passed, bound_ok, slack)


# ---------------------------------------------------------------------------
# product commutators
# ---------------------------------------------------------------------------


def _stacked(rho_field: ScalarField, u_field: ScalarField | VectorField,
             repeats: int) -> np.ndarray:
    comps = [rho_field.values]
    u = u_field.values if isinstance(u_field, VectorField) else u_field.values[None]
    for _ in range(repeats):
        comps.extend(list(u))
    return np.stack(comps)


def _pair_modulus(stack: np.ndarray, mol: Mollifier, grid: PeriodicGrid, p: float):
    """(||stack_eps - stack||_p^2, sup_{|y|<eps} ||stack(.-y) - stack||_p^2)."""
    stack_e = mollify_values(stack, mol, first_axis=1)
    diff = np.sqrt(np.sum((stack_e - stack) ** 2, axis=0))
    moll_term = lp_norm_values(diff, p, grid.cell_volume) ** 2
    rmax = mol.radius_cells
    sup = 0.0
    offs: list[tuple[int, ...]]
    if grid.dims == 1:
        offs = [(c,) for c in range(1, rmax + 1)]
    else:
        offs = [
            (cx, cy)
            for cx in range(0, rmax + 1)
            for cy in range(-rmax, rmax + 1)
            if (cx, cy) != (0, 0) and not (cx == 0 and cy < 0)
            and (cx * cx + cy * cy) * grid.cell_width**2 < mol.epsilon**2
        ]
    for off in offs:
        moved = shift_values(stack, off, first_axis=1)
        d = np.sqrt(np.sum((moved - stack) ** 2, axis=0))
        sup = max(sup, lp_norm_values(d, p, grid.cell_volume) ** 2)
    return stack_e, moll_term, sup


@dataclass(frozen=True)
class ProductCommutatorResult:
    eps: float
    norm: float          # L^{p/2} norm of the commutator
    rhs_mollify: float   # squared L^p mollification modulus of the tuple
    rhs_shift: float     # squared L^p shift modulus, sup over |y| < eps
    c0: float
    passed: bool
    commutator: np.ndarray


def bilinear_commutator(
    rho_field: ScalarField,
    u_field: ScalarField | VectorField,
    eps: float,
    p: float = 3.0,
    c0: float = C0_PRODUCT,
) -> ProductCommutatorResult:
    """rho_eps u_eps - (rho u)_eps with its one-sided modulus bound."""
    grid = rho_field.grid
    mol = build_mollifier(grid, eps)
    stack = _stacked(rho_field, u_field, 1)
    stack_e, rhs1, rhs2 = _pair_modulus(stack, mol, grid, p)
    rho, u = stack[0], stack[1:]
    rho_e, u_e = stack_e[0], stack_e[1:]
    comm = rho_e * u_e - mollify_values(rho * u, mol, first_axis=1)
    mag = np.sqrt(np.sum(comm * comm, axis=0))
    norm = lp_norm_values(mag, p / 2.0, grid.cell_volume)
    return ProductCommutatorResult(
        eps, norm, rhs1, rhs2, c0, bool(norm <= c0 * (rhs1 + rhs2)), comm
    )


def triple_commutator(
    rho_field: ScalarField,
    u_field: ScalarField | VectorField,
    eps: float,
    p: float = 3.0,
    c0: float = C0_PRODUCT,
) -> ProductCommutatorResult:
    """rho_eps u_eps (x) u_eps - (rho u (x) u)_eps, Frobenius magnitude."""
    grid = rho_field.grid
    mol = build_mollifier(grid, eps)
    stack = _stacked(rho_field, u_field, 2)
    ncomp = (stack.shape[0] - 1) // 2
    stack_e, rhs1, rhs2 = _pair_modulus(stack, mol, grid, p)
    rho, u = stack[0], stack[1 : 1 + ncomp]
    rho_e, u_e = stack_e[0], stack_e[1 : 1 + ncomp]
    outer = np.einsum("i...,j...->ij...", u, u)
    outer_e = np.einsum("i...,j...->ij...", u_e, u_e)
    flat = (rho * outer).reshape((ncomp * ncomp,) + rho.shape)
    comm = rho_e * outer_e - mollify_values(flat, mol, first_axis=1).reshape(outer.shape)
    mag = np.sqrt(np.sum(comm * comm, axis=(0, 1)))
    norm = lp_norm_values(mag, p / 2.0, grid.cell_volume)
    return ProductCommutatorResult(
        eps, norm, rhs1, rhs2, c0, bool(norm <= c0 * (rhs1 + rhs2)), comm
    )


def product_rate_fit(
    rho_field: ScalarField,
    u_field: ScalarField | VectorField,
    eps_range: Sequence[float],
    p: float = 3.0,
    kind: str = "bilinear",
    c0: float = C0_PRODUCT,
):
    """Decay slope of a product commutator over a dyadic eps scan."""
    fn = bilinear_commutator if kind == "bilinear" else triple_commutator
    eps_arr = np.array(sorted(float(e) for e in eps_range))
    results = [fn(rho_field, u_field, e, p, c0) for e in eps_arr]
    norms = np.array([r.norm for r in results])
    win = _asymptotic_window(len(eps_arr))
    slope, resid = _loglog_fit(eps_arr[win], norms[win])
    return slope, resid, results


def calibrate_c0(
    rho_field: ScalarField,
    u_field: ScalarField | VectorField,
    eps_range: Sequence[float],
    p: float = 3.0,
) -> float:
    """Max measured ratio norm / (rhs_mollify + rhs_shift) over the scan."""
    worst = 0.0
    for e in eps_range:
        for fn in (bilinear_commutator, triple_commutator):
            r = fn(rho_field, u_field, float(e), p, c0=math.inf)
            worst = max(worst, r.norm / (r.rhs_mollify + r.rhs_shift))
    return worst

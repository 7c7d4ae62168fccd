"""Periodic grids, discrete fields, mollification and lattice calculus.

The domain is the N-torus obtained from [-1, 1]^N by identifying opposite
faces, N in {1, 2}, discretized by equal cells with midpoint values.  Fields
are immutable; every reduction sums with `math.fsum`, so norms are exact
(correctly rounded) sums of their cell terms and therefore independent of
cell order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence, TextIO

import numpy as np

from .errors import DomainError, ResolutionError

#: Physical extent of the domain per dimension.
PERIOD = 2.0


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform periodic grid on ([-1, 1] with endpoints identified)^dims."""

    dims: int
    cells_per_dim: int

    def __post_init__(self) -> None:
        if self.dims not in (1, 2):
            raise ValueError(f"dims must be 1 or 2, got {self.dims}")
        if self.cells_per_dim < 4:
            raise ValueError(f"need at least 4 cells per dimension, got {self.cells_per_dim}")

    @property
    def cell_width(self) -> float:
        return PERIOD / self.cells_per_dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.cells_per_dim,) * self.dims

    @property
    def cell_volume(self) -> float:
        return self.cell_width**self.dims

    def axis_centers(self) -> np.ndarray:
        n = self.cells_per_dim
        return -1.0 + (np.arange(n) + 0.5) * self.cell_width

    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Cell-center coordinate arrays, broadcast to the grid shape."""
        c = self.axis_centers()
        if self.dims == 1:
            return (c,)
        return tuple(np.meshgrid(c, c, indexing="ij"))


def _frozen(values, shape) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.shape != shape:
        raise ValueError(f"values shape {arr.shape} does not match {shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("field values must be finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ScalarField:
    grid: PeriodicGrid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, self.grid.shape))


@dataclass(frozen=True)
class VectorField:
    """One component per grid dimension, component axis first."""

    grid: PeriodicGrid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "values", _frozen(self.values, (self.grid.dims,) + self.grid.shape)
        )


Field = ScalarField | VectorField


def constant_field(grid: PeriodicGrid, value: float) -> ScalarField:
    return ScalarField(grid, np.full(grid.shape, float(value)))


def field_from_function(grid: PeriodicGrid, fn) -> ScalarField:
    return ScalarField(grid, fn(*grid.coordinates()))


# ---------------------------------------------------------------------------
# reductions
# ---------------------------------------------------------------------------


def _pointwise_magnitude(field: Field) -> np.ndarray:
    if isinstance(field, ScalarField):
        return np.abs(field.values)
    return np.sqrt(np.sum(field.values * field.values, axis=0))


def lp_norm(field: Field, p: float) -> float:
    """Cell-volume-weighted L^p norm, p in [1, inf]."""
    mag = _pointwise_magnitude(field)
    return lp_norm_values(mag, p, field.grid.cell_volume)


def lp_norm_values(magnitudes: np.ndarray, p: float, cell_volume: float) -> float:
    if p != np.inf and p < 1.0:
        raise DomainError(f"Lebesgue exponent must be >= 1, got {p}")
    mag = np.abs(np.asarray(magnitudes, dtype=float))
    if p == np.inf:
        return float(np.max(mag))
    if p == 1.0:
        terms = mag
    elif p == 2.0:
        terms = mag * mag
    elif float(p).is_integer():
        terms = mag ** int(p)
    else:
        terms = mag**p
    total = math.fsum(terms.ravel())
    return float((cell_volume * total) ** (1.0 / p))


def integral(field: ScalarField) -> float:
    """Cell-volume-weighted integral (signed)."""
    return field.grid.cell_volume * math.fsum(field.values.ravel())


# ---------------------------------------------------------------------------
# shifts
# ---------------------------------------------------------------------------


class ShiftResult(NamedTuple):
    field: Field
    offsets: tuple[int, ...]
    snapped: bool


def shift_values(values: np.ndarray, offsets: Sequence[int], first_axis: int = 0) -> np.ndarray:
    """Translate so that out(x) = in(x + offsets*dx), periodic."""
    out = values
    for axis, cells in enumerate(offsets):
        if cells:
            out = np.roll(out, -cells, axis=first_axis + axis)
    return out


def offset_length(grid: PeriodicGrid, offsets: Sequence[int]) -> float:
    return grid.cell_width * math.sqrt(sum(c * c for c in offsets))


def shift(field: Field, h: Sequence[float] | float) -> ShiftResult:
    """Periodic translation by the displacement h (physical units).

    h is snapped to the nearest lattice vector; the result records whether
    snapping changed it.
    """
    grid = field.grid
    hv = np.atleast_1d(np.asarray(h, dtype=float))
    if hv.shape != (grid.dims,):
        raise ValueError(f"shift vector must have {grid.dims} component(s)")
    cells = np.rint(hv / grid.cell_width).astype(int)
    snapped = bool(np.max(np.abs(hv - cells * grid.cell_width)) > 1e-12 * grid.cell_width)
    first_axis = 0 if isinstance(field, ScalarField) else 1
    moved = shift_values(field.values, tuple(cells), first_axis)
    out: Field
    if isinstance(field, ScalarField):
        out = ScalarField(grid, moved)
    else:
        out = VectorField(grid, moved)
    return ShiftResult(out, tuple(int(c) for c in cells), snapped)


# ---------------------------------------------------------------------------
# mollification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Mollifier:
    """Discretized smooth bump with support strictly inside {|y| < epsilon}.

    ``offsets`` holds integer lattice offsets (rows), ``weights`` the kernel
    values there, normalized so that sum(weights) * cell_volume = 1.
    """

    epsilon: float
    cell_width: float
    offsets: np.ndarray
    weights: np.ndarray

    @property
    def radius_cells(self) -> int:
        return int(np.max(np.abs(self.offsets)))


def build_mollifier(grid: PeriodicGrid, epsilon: float) -> Mollifier:
    """Kernel exp(-1/(1 - |y/eps|^2)) sampled on the lattice and normalized."""
    eps = float(epsilon)
    if eps <= 0:
        raise DomainError(f"mollifier radius must be positive, got {eps}")
    dx = grid.cell_width
    if eps < 2.0 * dx:
        raise ResolutionError(
            f"mollifier radius {eps:g} not resolvable on cell width {dx:g} (need >= 2 cells)"
        )
    r = int(math.floor(eps / dx))
    while r * dx >= eps:
        r -= 1
    rng = np.arange(-r, r + 1)
    if grid.dims == 1:
        offsets = rng.reshape(-1, 1)
    else:
        ox, oy = np.meshgrid(rng, rng, indexing="ij")
        offsets = np.stack([ox.ravel(), oy.ravel()], axis=1)
    dist2 = np.sum((offsets * dx / eps) ** 2, axis=1)
    keep = dist2 < 1.0
    offsets = offsets[keep]
    w = np.exp(-1.0 / (1.0 - dist2[keep]))
    w = w / (math.fsum(w) * grid.cell_volume)
    order = np.lexsort(offsets.T[::-1])
    return Mollifier(eps, dx, offsets[order], w[order])


def mollify_values(values: np.ndarray, mol: Mollifier, first_axis: int = 0) -> np.ndarray:
    vol = mol.cell_width ** mol.offsets.shape[1]
    out = np.zeros_like(values)
    for off, w in zip(mol.offsets, mol.weights):
        out += (w * vol) * shift_values(values, tuple(-off), first_axis)
    return out


def mollify(field: Field, mol: Mollifier) -> Field:
    """Periodic convolution with the mollifier kernel."""
    if abs(mol.cell_width - field.grid.cell_width) > 1e-15:
        raise ValueError("mollifier was built for a different grid")
    first_axis = 0 if isinstance(field, ScalarField) else 1
    out = mollify_values(field.values, mol, first_axis)
    if isinstance(field, ScalarField):
        return ScalarField(field.grid, out)
    return VectorField(field.grid, out)


# ---------------------------------------------------------------------------
# lattice calculus
# ---------------------------------------------------------------------------


def grad_values(values: np.ndarray, cell_width: float) -> np.ndarray:
    comps = [
        (np.roll(values, -1, axis=ax) - np.roll(values, 1, axis=ax)) / (2.0 * cell_width)
        for ax in range(values.ndim)
    ]
    return np.stack(comps)


def grad(field: ScalarField) -> VectorField:
    """Second-order central gradient, periodic."""
    return VectorField(field.grid, grad_values(field.values, field.grid.cell_width))


def div(field: VectorField) -> ScalarField:
    """Second-order central divergence, periodic."""
    dx = field.grid.cell_width
    out = np.zeros(field.grid.shape)
    for ax in range(field.grid.dims):
        comp = field.values[ax]
        out += (np.roll(comp, -1, axis=ax) - np.roll(comp, 1, axis=ax)) / (2.0 * dx)
    return ScalarField(field.grid, out)


# ---------------------------------------------------------------------------
# synthetic fields
# ---------------------------------------------------------------------------


def weierstrass_values(alpha: float, levels: int, x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    for k in range(levels + 1):
        out += 2.0 ** (-alpha * k) * np.cos((2.0**k) * np.pi * x)
    return out


def weierstrass_field(alpha: float, levels: int, grid: PeriodicGrid) -> ScalarField:
    """Lacunary cosine sum of Hoelder exponent alpha, saturating the grid.

    W(x) = sum_{k<=levels} 2**(-alpha k) cos(2**k pi x); in 2D the tensor
    product W(x) * W(y).  Requires 2**levels >= cells_per_dim so that the
    series reaches the grid scale.
    """
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    if 2**levels < grid.cells_per_dim:
        raise ResolutionError(
            f"2**levels = {2 ** levels} must reach cells_per_dim = {grid.cells_per_dim}"
        )
    c = grid.axis_centers()
    w = weierstrass_values(alpha, levels, c)
    if grid.dims == 1:
        return ScalarField(grid, w)
    return ScalarField(grid, np.outer(w, w))


# ---------------------------------------------------------------------------
# CSV snapshots
# ---------------------------------------------------------------------------

_COORD_NAMES = ("x", "y")


def write_columns_csv(
    stream: TextIO,
    grid: PeriodicGrid,
    columns: dict[str, np.ndarray],
    comments: Iterable[str] = (),
) -> None:
    """Row-major cell dump with 17 significant digits per value."""
    for line in comments:
        stream.write(f"# {line}\n")
    names = list(columns)
    stream.write(",".join(_COORD_NAMES[: grid.dims] + tuple(names)) + "\n")
    coords = [c.ravel() for c in grid.coordinates()]
    data = [np.asarray(columns[n]).reshape(grid.shape).ravel() for n in names]
    for i in range(coords[0].size):
        row = [f"{c[i]:.17g}" for c in coords] + [f"{d[i]:.17g}" for d in data]
        stream.write(",".join(row) + "\n")


def read_columns_csv(stream: TextIO) -> tuple[PeriodicGrid, dict[str, np.ndarray]]:
    header = None
    rows = []
    for line in stream:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if header is None:
            header = line.split(",")
            continue
        rows.append([float(tok) for tok in line.split(",")])
    if header is None or not rows:
        raise ValueError("empty field CSV")
    ncoord = sum(1 for name in header if name in _COORD_NAMES)
    if ncoord not in (1, 2):
        raise ValueError(f"expected coordinate columns x[,y], got header {header}")
    data = np.asarray(rows, dtype=float)
    count = data.shape[0]
    n = round(count ** (1.0 / ncoord))
    if n**ncoord != count:
        raise ValueError(f"row count {count} is not a {ncoord}-dim grid")
    grid = PeriodicGrid(ncoord, n)
    columns = {
        name: data[:, ncoord + j].reshape(grid.shape)
        for j, name in enumerate(header[ncoord:])
    }
    return grid, columns


def save_scalar_field(path, field: ScalarField, name: str = "value", comments=()) -> None:
    with open(path, "w") as fh:
        write_columns_csv(fh, field.grid, {name: field.values}, comments)


def load_scalar_field(path, name: str | None = None) -> ScalarField:
    with open(path) as fh:
        grid, cols = read_columns_csv(fh)
    if name is None:
        name = next(iter(cols))
    return ScalarField(grid, cols[name])

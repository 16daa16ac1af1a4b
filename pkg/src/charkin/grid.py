"""Uniform (lambda, mu) grids, their Fourier duals on (x, p), and field storage.

Fourier convention
------------------
A characteristic function C(lambda, mu) on the grid and a phase-space function
F(x, p) on the dual grid are related by

.. math:: F(x, p) = (2\\pi)^{-2N} \\int d\\lambda\\, d\\mu\\; C(\\lambda, \\mu)\\,
          e^{-i(\\lambda x + \\mu p)}

discretised as a centred DFT scaled by the cell volume, so that C(0, 0) = 1 maps
to a phase-space function of unit mass. The inverse is exact on the grid.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

__all__ = [
    "Ordering",
    "KernelKind",
    "PhaseGrid",
    "CharField",
    "make_grid",
    "xi_of",
    "xi_field",
    "fourier_to_phase",
    "fourier_from_phase",
    "spectral_derivative",
    "phase_derivative",
]


class Ordering(str, enum.Enum):
    NORMAL = "normal"
    SYMMETRIC = "symmetric"
    ANTINORMAL = "antinormal"
    CLASSICAL = "classical"

    @property
    def is_quantum(self) -> bool:
        return self is not Ordering.CLASSICAL


# EOM kernels carry the same four tags as the orderings they act on.
KernelKind = Ordering


def _as_tuple(value, n: int, cast=float) -> tuple:
    if np.isscalar(value):
        return (cast(value),) * n
    value = tuple(cast(v) for v in value)
    if len(value) != n:
        raise ValueError(f"expected {n} per-axis values, got {len(value)}")
    return value


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform grid over (lambda, mu) in R^{2N} plus the physical constants.

    ``points[i]`` nodes per axis, shared by ``lambda_i`` and ``mu_i``; nodes sit at
    ``-L + k * spacing`` for ``k = 0 .. G-1`` so the origin is always a node.
    """

    dims: int
    extent_lambda: tuple[float, ...]
    extent_mu: tuple[float, ...]
    points: tuple[int, ...]
    hbar: float = 1.0
    omega: float = 1.0

    def __post_init__(self):
        if self.dims < 1:
            raise ValueError("dims must be a positive integer")
        for g in self.points:
            if g <= 0 or g % 2:
                raise ValueError(f"odd grid size: {g} (grid.G must be even)")
        for ext in self.extent_lambda + self.extent_mu:
            if not ext > 0:
                raise ValueError("grid extents must be positive")
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")
        if not self.omega > 0:
            raise ValueError("omega must be positive")

    # -- geometry -----------------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.points + self.points

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def d_lambda(self) -> np.ndarray:
        return 2.0 * np.asarray(self.extent_lambda) / np.asarray(self.points)

    @property
    def d_mu(self) -> np.ndarray:
        return 2.0 * np.asarray(self.extent_mu) / np.asarray(self.points)

    @property
    def d_x(self) -> np.ndarray:
        return 2.0 * np.pi / (np.asarray(self.points) * self.d_lambda)

    @property
    def d_p(self) -> np.ndarray:
        return 2.0 * np.pi / (np.asarray(self.points) * self.d_mu)

    @property
    def cell_volume(self) -> float:
        """Quadrature weight of one (lambda, mu) node."""
        return float(np.prod(self.d_lambda) * np.prod(self.d_mu))

    @property
    def dual_cell_volume(self) -> float:
        return float(np.prod(self.d_x) * np.prod(self.d_p))

    def _centred(self, step: np.ndarray) -> list[np.ndarray]:
        return [(np.arange(g) - g // 2) * s for g, s in zip(self.points, step)]

    @property
    def lambda_axes(self) -> list[np.ndarray]:
        return self._centred(self.d_lambda)

    @property
    def mu_axes(self) -> list[np.ndarray]:
        return self._centred(self.d_mu)

    @property
    def x_axes(self) -> list[np.ndarray]:
        return self._centred(self.d_x)

    @property
    def p_axes(self) -> list[np.ndarray]:
        return self._centred(self.d_p)

    @property
    def axes(self) -> list[np.ndarray]:
        return self.lambda_axes + self.mu_axes

    @property
    def dual_axes(self) -> list[np.ndarray]:
        return self.x_axes + self.p_axes

    def mesh(self) -> tuple[list[np.ndarray], list[np.ndarray]]:
        """Full-shape coordinate arrays ``(lambdas, mus)``."""
        grids = np.meshgrid(*self.axes, indexing="ij")
        return grids[: self.dims], grids[self.dims:]

    def dual_mesh(self) -> tuple[list[np.ndarray], list[np.ndarray]]:
        grids = np.meshgrid(*self.dual_axes, indexing="ij")
        return grids[: self.dims], grids[self.dims:]

    @property
    def origin_index(self) -> tuple[int, ...]:
        return tuple(g // 2 for g in self.shape)

    def with_hbar(self, hbar: float) -> "PhaseGrid":
        return replace(self, hbar=float(hbar))

    def compatible(self, other: "PhaseGrid") -> bool:
        return (
            self.dims == other.dims
            and self.points == other.points
            and np.allclose(self.extent_lambda, other.extent_lambda, rtol=0, atol=1e-14)
            and np.allclose(self.extent_mu, other.extent_mu, rtol=0, atol=1e-14)
        )


def make_grid(
    dims: int = 1,
    extent_lambda: float | Sequence[float] = 8.0,
    extent_mu: float | Sequence[float] | None = None,
    points: int | Sequence[int] = 64,
    hbar: float = 1.0,
    omega: float = 1.0,
) -> PhaseGrid:
    """Build a :class:`PhaseGrid`; ``extent_mu`` defaults to ``extent_lambda``."""
    if extent_mu is None:
        extent_mu = extent_lambda
    return PhaseGrid(
        dims=int(dims),
        extent_lambda=_as_tuple(extent_lambda, dims),
        extent_mu=_as_tuple(extent_mu, dims),
        points=_as_tuple(points, dims, cast=int),
        hbar=float(hbar),
        omega=float(omega),
    )


def difference_grid(grid: PhaseGrid) -> PhaseGrid:
    """Grid with the same spacing and twice the extent, holding all node differences."""
    return PhaseGrid(
        grid.dims,
        tuple(2 * e for e in grid.extent_lambda),
        tuple(2 * e for e in grid.extent_mu),
        tuple(2 * g for g in grid.points),
        grid.hbar,
        grid.omega,
    )


@dataclass
class CharField:
    """Complex samples of a characteristic function on a grid.

    ``data`` has shape ``grid.shape`` (lambda axes first, then mu axes).
    ``flags`` carries non-fatal diagnostics such as oracle validity warnings.
    """

    grid: PhaseGrid
    data: np.ndarray
    ordering: Ordering
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        self.ordering = Ordering(self.ordering)
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.shape != self.grid.shape:
            raise ValueError(
                f"data shape {self.data.shape} does not match grid shape {self.grid.shape}"
            )
        if not np.all(np.isfinite(self.data)):
            raise ValueError("characteristic function samples must be finite")

    @property
    def origin_value(self) -> complex:
        return complex(self.data[self.grid.origin_index])

    def copy(self, data: np.ndarray | None = None, **changes) -> "CharField":
        new = CharField(
            grid=changes.pop("grid", self.grid),
            data=self.data.copy() if data is None else data,
            ordering=changes.pop("ordering", self.ordering),
            flags=dict(self.flags),
        )
        if changes:
            raise TypeError(f"unexpected fields: {sorted(changes)}")
        return new

    def __add__(self, other: "CharField") -> "CharField":
        _check_same(self, other)
        return self.copy(self.data + other.data)

    def __sub__(self, other: "CharField") -> "CharField":
        _check_same(self, other)
        return self.copy(self.data - other.data)

    def __mul__(self, scalar) -> "CharField":
        return self.copy(self.data * scalar)

    __rmul__ = __mul__


def _check_same(a: CharField, b: CharField) -> None:
    if not a.grid.compatible(b.grid):
        raise ValueError("grid mismatch")
    if a.ordering is not b.ordering:
        raise ValueError(f"ordering mismatch: {a.ordering.value} vs {b.ordering.value}")


def xi_field(grid: PhaseGrid) -> tuple[np.ndarray, np.ndarray]:
    """Complex ``xi_i`` (stacked on axis 0) and ``|xi|^2`` at every node."""
    lams, mus = grid.mesh()
    scale = np.sqrt(grid.hbar / (2.0 * grid.omega))
    xi = np.stack([scale * (lam - 1j * grid.omega * mu) for lam, mu in zip(lams, mus)])
    abs2 = (grid.hbar / (2.0 * grid.omega)) * sum(
        lam**2 + grid.omega**2 * mu**2 for lam, mu in zip(lams, mus)
    )
    return xi, abs2


def xi_of(grid: PhaseGrid, index: Sequence[int]) -> tuple[np.ndarray, float]:
    """``xi`` vector and ``|xi|^2`` at a single node ``index`` (length 2N)."""
    index = tuple(int(i) for i in index)
    if len(index) != 2 * grid.dims or any(
        not 0 <= i < g for i, g in zip(index, grid.shape)
    ):
        raise IndexError(f"node index {index} outside grid of shape {grid.shape}")
    axes = grid.axes
    lam = np.array([axes[i][index[i]] for i in range(grid.dims)])
    mu = np.array([axes[grid.dims + i][index[grid.dims + i]] for i in range(grid.dims)])
    return _xi(lam, mu, grid.hbar, grid.omega)


def _xi(lam, mu, hbar, omega):
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    xi = np.sqrt(hbar / (2 * omega)) * (lam - 1j * omega * mu)
    return xi, float(np.sum(np.abs(xi) ** 2))


def _transform_scale(grid: PhaseGrid) -> float:
    return grid.cell_volume / (2.0 * np.pi) ** (2 * grid.dims)


def fourier_to_phase(field: CharField | np.ndarray, grid: PhaseGrid | None = None) -> np.ndarray:
    """Transform a characteristic function to its phase-space function on (x, p)."""
    data, grid = _unpack(field, grid)
    return _transform_scale(grid) * np.fft.fftshift(np.fft.fftn(np.fft.ifftshift(data)))


def fourier_from_phase(
    data: np.ndarray, grid: PhaseGrid, ordering: Ordering | str = Ordering.SYMMETRIC
) -> CharField:
    """Exact discrete inverse of :func:`fourier_to_phase`."""
    values = np.fft.fftshift(np.fft.ifftn(np.fft.ifftshift(data))) / _transform_scale(grid)
    return CharField(grid, values, Ordering(ordering))


def _unpack(field, grid):
    if isinstance(field, CharField):
        return field.data, field.grid
    if grid is None:
        raise TypeError("a grid is required when passing a bare array")
    return np.asarray(field), grid


def _axis_multiplier(coords: np.ndarray, order: int, sign: complex) -> np.ndarray:
    mult = (sign * coords) ** order
    if order % 2:
        # Nyquist node has no partner; zeroing keeps odd derivatives Hermitian.
        mult = mult.astype(complex)
        mult[0] = 0.0
    return mult


def _apply_multipliers(data: np.ndarray, multipliers: list[np.ndarray]) -> np.ndarray:
    out = data
    for axis, mult in enumerate(multipliers):
        if mult is None:
            continue
        shape = [1] * data.ndim
        shape[axis] = -1
        out = out * mult.reshape(shape)
    return out


def spectral_derivative(
    field: CharField | np.ndarray, orders: Sequence[int], grid: PhaseGrid | None = None
) -> np.ndarray:
    """Spectral partial derivative of a (lambda, mu) field.

    ``orders`` gives the derivative order along each of the 2N axes. Since
    ``C = FT[W]`` with kernel ``exp(+i lambda x)``, d/dlambda maps to ``i x``.
    """
    data, grid = _unpack(field, grid)
    orders = tuple(int(o) for o in orders)
    if not any(orders):
        return np.array(data, dtype=complex)
    dual = fourier_to_phase(data, grid)
    mults = [
        _axis_multiplier(ax, o, 1j) if o else None for ax, o in zip(grid.dual_axes, orders)
    ]
    return fourier_from_phase(_apply_multipliers(dual, mults), grid).data


def phase_derivative(data: np.ndarray, orders: Sequence[int], grid: PhaseGrid) -> np.ndarray:
    """Spectral partial derivative of an (x, p) field on the dual grid."""
    orders = tuple(int(o) for o in orders)
    if not any(orders):
        return np.array(data, dtype=complex)
    spec = fourier_from_phase(data, grid).data
    mults = [
        _axis_multiplier(ax, o, -1j) if o else None for ax, o in zip(grid.axes, orders)
    ]
    return fourier_to_phase(_apply_multipliers(spec, mults), grid)

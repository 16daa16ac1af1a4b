"""Wigner-function view of symmetric-order fields and the Moyal-series EOM.

For a single mode with Weyl symbol ``H(x, p)``::

    dW/dt = sum_m b_m sum_k (-1)^k binom(2m+1, k)
            (d_x^k d_p^(2m+1-k) W) (d_x^(2m+1-k) d_p^k H)

with ``b_m = (-1)^m (hbar/2)^(2m) / (2m+1)!``. The ``m = 0`` term is the
Poisson-bracket drift ``d_x H d_p W - d_p H d_x W``. For polynomial symbols of
degree ``d`` the series terminates at ``m = (d - 1) // 2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid import CharField, Ordering, PhaseGrid, fourier_from_phase, fourier_to_phase, phase_derivative
from .hamiltonian import MAX_DEGREE, XPPoly

REAL_TOL = 1e-10
MASS_TOL = 1e-10


class ResolutionError(ValueError):
    """Derivative order too high for the grid to resolve."""


@dataclass
class WignerField:
    """Real phase-space field on the dual ``(x, p)`` grid of ``grid``."""

    grid: PhaseGrid
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.shape != self.grid.shape:
            raise ValueError(f"field shape {data.shape} does not match grid {self.grid.shape}")
        if np.iscomplexobj(data):
            scale = max(float(np.linalg.norm(data)), 1e-300)
            if np.linalg.norm(data.imag) > REAL_TOL * scale:
                raise ValueError("Wigner field has a non-negligible imaginary part")
            data = data.real
        self.data = np.asarray(data, dtype=float)

    @property
    def mass(self) -> float:
        return float(np.sum(self.data) * self.grid.dual_cell_volume)

    def mesh(self):
        return self.grid.dual_mesh()


@dataclass(frozen=True)
class MoyalOrder:
    """Truncation of the Moyal series: keep ``m = 0 .. M``."""

    M: int
    hbar: float = 1.0

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 0:
            raise ValueError("Moyal order M must be a non-negative integer")

    def b(self, m: int) -> float:
        return (-1) ** m * (self.hbar / 2) ** (2 * m) / math.factorial(2 * m + 1)

    @property
    def coefficients(self) -> list[float]:
        return [self.b(m) for m in range(self.M + 1)]

    @classmethod
    def terminating(cls, symbol: XPPoly, hbar: float = 1.0) -> "MoyalOrder":
        """Smallest order at which the series is exact for a polynomial symbol."""
        return cls(max(0, (symbol.degree - 1) // 2), hbar)


def to_wigner(C: CharField) -> WignerField:
    """Real Wigner function of a symmetric-order field.

    Nodes at ``-L`` have no mirror on an even grid, so their content shows up
    as an imaginary part; that much is tolerated and dropped.
    """
    if C.ordering is not Ordering.SYMMETRIC:
        raise ValueError(f"the Wigner transform needs symmetric order, got {C.ordering.value}")
    F = fourier_to_phase(C)
    unpaired = np.zeros(C.grid.shape, dtype=complex)
    for axis in range(C.data.ndim):
        idx = [slice(None)] * C.data.ndim
        idx[axis] = 0
        unpaired[tuple(idx)] = C.data[tuple(idx)]
    allowed = np.linalg.norm(fourier_to_phase(unpaired, C.grid)) + REAL_TOL * np.linalg.norm(F)
    if np.linalg.norm(F.imag) > allowed:
        raise ValueError("Wigner field has a non-negligible imaginary part")
    W = WignerField(C.grid, F.real)
    if abs(W.mass - C.origin_value) > MASS_TOL * max(1.0, abs(C.origin_value)):
        raise ValueError(f"Wigner mass {W.mass} differs from C(0) = {C.origin_value}")
    return W


def from_wigner(W: WignerField) -> CharField:
    return fourier_from_phase(W.data, W.grid, Ordering.SYMMETRIC)


def _single_mode(W: WignerField) -> None:
    if W.grid.dims != 1:
        raise ValueError("the Moyal path is implemented for single-mode fields")


def _check_resolution(W: WignerField, order: int, tol: float) -> None:
    """Reject derivative orders whose amplification of edge content exceeds ``tol``."""
    grid = W.grid
    if order > max(grid.points) // 4:
        raise ResolutionError(f"derivative order {order} too high for {grid.points} points")
    if order == 0:
        return
    spec = np.abs(fourier_from_phase(W.data, grid).data)
    peak = float(spec.max())
    if peak == 0:
        return
    edge = max(float(spec[0].max()), float(spec[:, 0].max()))
    reach = max(grid.extent_lambda + grid.extent_mu)
    if edge * reach**order > tol * peak:
        raise ResolutionError(
            f"spectral tail {edge / peak:.2e} amplified by order {order} exceeds {tol:g}"
        )


def _symbol_derivs(H, grid: PhaseGrid):
    """Callable ``(dx, dp) -> array`` of symbol derivatives on the dual mesh."""
    (x,), (p,) = grid.dual_mesh()
    if isinstance(H, XPPoly):
        if not H.is_real():
            raise ValueError("Hamiltonian symbol must be real")
        return lambda dx, dp: np.broadcast_to(np.real(H.derivative(dx, dp)(x, p)), x.shape)
    H = np.asarray(H)
    if H.shape != grid.shape:
        raise ValueError("symbol samples must live on the dual grid")
    cache: dict = {}

    def get(dx, dp):
        if (dx, dp) not in cache:
            cache[(dx, dp)] = np.real(phase_derivative(H, (dx, dp), grid))
        return cache[(dx, dp)]

    return get


def moyal_rhs(W: WignerField, H: XPPoly | np.ndarray, order: MoyalOrder | int,
              resolution_tol: float = 1e-6) -> WignerField:
    """Truncated Moyal-series time derivative of ``W``.

    ``H`` is the Weyl symbol, either as a polynomial (exact derivatives) or
    as samples on the dual grid (spectral derivatives).
    """
    _single_mode(W)
    grid = W.grid
    if not isinstance(order, MoyalOrder):
        order = MoyalOrder(int(order), grid.hbar)
    top = 2 * order.M + 1
    if isinstance(H, XPPoly):
        if H.degree > MAX_DEGREE:
            raise ValueError(f"degree overflow: {H.degree} > {MAX_DEGREE}")
        top = min(top, max(H.degree, 1))
    _check_resolution(W, top, resolution_tol)
    dH = _symbol_derivs(H, grid)
    dW: dict = {}
    out = np.zeros(grid.shape)
    for m in range(order.M + 1):
        n = 2 * m + 1
        if isinstance(H, XPPoly) and n > H.degree:
            break
        bm = order.b(m)
        for k in range(n + 1):
            h = dH(n - k, k)
            if not np.any(h):
                continue
            if (k, n - k) not in dW:
                dW[(k, n - k)] = np.real(phase_derivative(W.data, (k, n - k), grid))
            out += bm * (-1) ** k * math.comb(n, k) * dW[(k, n - k)] * h
    return WignerField(grid, out)


def _potential_poly(V) -> XPPoly:
    if isinstance(V, XPPoly):
        if any(k for _, k in V.terms):
            raise ValueError("potential must depend on x only")
        return V
    coeffs = np.asarray(V, dtype=float)
    return XPPoly({(j, 0): c for j, c in enumerate(coeffs) if c})


def kinetic_potential_rhs(W: WignerField, V: XPPoly | Sequence[float],
                          resolution_tol: float = 1e-6) -> WignerField:
    """``dW/dt`` for ``H = p^2/2 + V(x)`` with polynomial ``V``.

    ``V`` is an x-only :class:`XPPoly` or a coefficient list ``[v0, v1, ...]``.
    Quantum corrections carry the same ``b_m`` weights as :func:`moyal_rhs`.
    """
    _single_mode(W)
    V = _potential_poly(V)
    if V.degree > MAX_DEGREE:
        raise ValueError(f"potential degree {V.degree} exceeds {MAX_DEGREE}")
    grid = W.grid
    (x,), (p,) = grid.dual_mesh()
    order = MoyalOrder(max(0, (V.degree - 1) // 2), grid.hbar)
    _check_resolution(W, max(1, 2 * order.M + 1), resolution_tol)

    def dV(n):
        return np.broadcast_to(np.real(V.derivative(n, 0)(x, p)), x.shape)

    out = dV(1) * np.real(phase_derivative(W.data, (0, 1), grid))
    out = out - p * np.real(phase_derivative(W.data, (1, 0), grid))
    for m in range(1, order.M + 1):
        n = 2 * m + 1
        out = out + order.b(m) * dV(n) * np.real(phase_derivative(W.data, (0, n), grid))
    return WignerField(grid, out)

"""Classical characteristic-function dynamics and Liouville cross-checks.

The classical field ``C(lambda, mu) = int P(x, p) exp(i(lambda x + mu p))``
obeys the same convolution EOM as the quantum fields with the kernel
``K_c = lambda mu' - mu lambda'``, which does not involve ``hbar``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .evolution import RhsMethod, rhs_distributional, rhs_quadrature
from .grid import CharField, Ordering, PhaseGrid, phase_derivative
from .hamiltonian import (
    Distributional,
    GridSampled,
    PolyHamiltonian,
    XPPoly,
    distributional_from_symbol,
)


@dataclass(frozen=True)
class ClassicalHamiltonian:
    """Real polynomial phase-space function ``H(x, p) = sum h[j, k] x^j p^k``."""

    symbol: XPPoly

    def __post_init__(self):
        if not self.symbol.is_real():
            raise ValueError("classical Hamiltonian must be real-valued")

    @classmethod
    def from_rows(cls, rows) -> "ClassicalHamiltonian":
        return cls(XPPoly(rows))

    @classmethod
    def from_quantum(cls, ham: PolyHamiltonian, hbar: float = 1.0,
                     omega: float = 1.0) -> "ClassicalHamiltonian":
        """Weyl symbol of a quantum Hamiltonian, read as a classical function."""
        return cls(ham.weyl_symbol(hbar, omega).cleaned())

    @classmethod
    def harmonic(cls, omega: float = 1.0) -> "ClassicalHamiltonian":
        return cls(XPPoly({(0, 2): 0.5, (2, 0): 0.5 * omega**2}))

    @classmethod
    def free(cls) -> "ClassicalHamiltonian":
        return cls(XPPoly({(0, 2): 0.5}))

    def distributional(self) -> Distributional:
        return distributional_from_symbol(self.symbol, Ordering.CLASSICAL)

    def __call__(self, x, p):
        return np.real(self.symbol(x, p))


def _as_rep(H):
    if isinstance(H, ClassicalHamiltonian):
        return H.distributional()
    return H


def classical_rhs(C: CharField, H: ClassicalHamiltonian | Distributional | GridSampled,
                  threads: int = 1) -> CharField:
    """``dC/dt`` with the classical kernel.

    A :class:`ClassicalHamiltonian` or :class:`Distributional` form goes
    through the collapsed PDE; a :class:`GridSampled` one through quadrature.
    """
    if C.ordering is not Ordering.CLASSICAL:
        raise ValueError(f"classical_rhs needs a classical field, got {C.ordering.value}")
    rep = _as_rep(H)
    if isinstance(rep, GridSampled):
        return rhs_quadrature(C, rep, Ordering.CLASSICAL, threads=threads)
    return rhs_distributional(C, rep, Ordering.CLASSICAL)


def classical_method(H) -> str:
    return RhsMethod.QUADRATURE if isinstance(H, GridSampled) else RhsMethod.DISTRIBUTIONAL


def liouville_pde_rhs(P: np.ndarray, H: ClassicalHamiltonian | XPPoly | np.ndarray,
                      grid: PhaseGrid) -> np.ndarray:
    """``dP/dt = d_x H d_p P - d_p H d_x P`` on the dual grid, spectral derivatives.

    ``H`` may be a polynomial (exact derivatives) or samples on the dual grid.
    """
    if grid.dims != 1:
        raise ValueError("liouville_pde_rhs is single-mode")
    P = np.asarray(P)
    (x,), (p,) = grid.dual_mesh()
    if isinstance(H, ClassicalHamiltonian):
        H = H.symbol
    if isinstance(H, XPPoly):
        hx = np.broadcast_to(H.derivative(1, 0)(x, p), x.shape)
        hp = np.broadcast_to(H.derivative(0, 1)(x, p), x.shape)
    else:
        hx = phase_derivative(H, (1, 0), grid)
        hp = phase_derivative(H, (0, 1), grid)
    out = hx * phase_derivative(P, (0, 1), grid) - hp * phase_derivative(P, (1, 0), grid)
    return np.real(out) if not np.iscomplexobj(P) else out


# -- analytic reference flows ------------------------------------------------------

CharFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


def harmonic_flow(C0: CharFn, t: float, omega: float = 1.0) -> CharFn:
    """Exact classical evolution under ``H = (p^2 + omega^2 x^2) / 2``.

    Phase-space points rotate, ``x(t) = x cos wt + p sin(wt) / w`` and
    ``p(t) = p cos wt - w x sin wt``, so
    ``C(l, m, t) = C0(l cos wt - m w sin wt, l sin(wt) / w + m cos wt)``.
    """
    c, s = np.cos(omega * t), np.sin(omega * t)
    return lambda lam, mu: C0(lam * c - mu * omega * s, lam * s / omega + mu * c)


def free_flow(C0: CharFn, t: float) -> CharFn:
    """Exact evolution under ``H = p^2 / 2``: ``x(t) = x + p t``, so ``C(l, m, t) = C0(l, m + l t)``."""
    return lambda lam, mu: C0(lam, mu + lam * t)


def gaussian_charfn(x0: float = 0.0, p0: float = 0.0, sx: float = 1.0,
                    sp: float = 1.0) -> CharFn:
    """Characteristic function of an uncorrelated Gaussian phase-space density."""
    def C(lam, mu):
        return np.exp(1j * (lam * x0 + mu * p0) - 0.5 * (sx**2 * lam**2 + sp**2 * mu**2))
    return C


def sample_charfn(fn: CharFn, grid: PhaseGrid, ordering: Ordering | str = Ordering.CLASSICAL) -> CharField:
    if grid.dims != 1:
        raise ValueError("analytic flows are single-mode")
    (lam,), (mu,) = grid.mesh()
    return CharField(grid, np.asarray(fn(lam, mu), dtype=complex), Ordering(ordering))

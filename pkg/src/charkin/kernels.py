"""EOM kernels for the normal, symmetric, antinormal and classical characteristic functions.

With ``S = lambda . mu' - mu . lambda'`` and
``E = (hbar / 2 omega) [lambda' . (lambda - lambda') + omega^2 mu' . (mu - mu')]``::

    K_s = (2 / hbar) sin(hbar S / 2)
    K_n = exp(+E) K_s
    K_a = exp(-E) K_s
    K_c = S
"""
from __future__ import annotations

import math
from functools import partial
from typing import Callable

import numpy as np

from .grid import KernelKind, Ordering, PhaseGrid

__all__ = [
    "eval_kernel",
    "kernel",
    "kernel_limit_defect",
    "diagonal_derivatives",
    "KernelCache",
]


def _dot(a, b, vector: bool):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.sum(a * b, axis=-1) if vector else a * b


def eval_kernel(
    kind: KernelKind | str,
    lam,
    mu,
    lam_p,
    mu_p,
    hbar: float = 1.0,
    omega: float = 1.0,
    vector: bool = False,
):
    """Evaluate a kernel at broadcastable points.

    With ``vector=True`` the last axis of every argument indexes the N
    dimensions and the products become dot products.
    """
    kind = KernelKind(kind)
    symplectic = _dot(lam, mu_p, vector) - _dot(mu, lam_p, vector)
    if kind is Ordering.CLASSICAL:
        return symplectic
    if not np.all(np.asarray(hbar) > 0):
        raise ValueError("quantum kernels need hbar > 0")
    ks = (2.0 / hbar) * np.sin(0.5 * hbar * symplectic)
    if kind is Ordering.SYMMETRIC:
        return ks
    lam = np.asarray(lam, dtype=float)
    mu = np.asarray(mu, dtype=float)
    lam_p = np.asarray(lam_p, dtype=float)
    mu_p = np.asarray(mu_p, dtype=float)
    expo = (hbar / (2.0 * omega)) * (
        _dot(lam_p, lam - lam_p, vector) + omega**2 * _dot(mu_p, mu - mu_p, vector)
    )
    sign = 1.0 if kind is Ordering.NORMAL else -1.0
    return np.exp(sign * expo) * ks


def kernel(kind: KernelKind | str, hbar: float = 1.0, omega: float = 1.0,
           vector: bool = False) -> Callable:
    """Kernel as a closure over its parameters: ``k(lam, mu, lam_p, mu_p)``."""
    return partial(eval_kernel, KernelKind(kind), hbar=hbar, omega=omega, vector=vector)


def kernel_limit_defect(hbar: float, lam, mu, lam_p, mu_p, vector: bool = False):
    """``|K_s - K_c|`` at the given points."""
    ks = eval_kernel(Ordering.SYMMETRIC, lam, mu, lam_p, mu_p, hbar=hbar, vector=vector)
    kc = eval_kernel(Ordering.CLASSICAL, lam, mu, lam_p, mu_p, vector=vector)
    return np.abs(ks - kc)


def _gauss_taylor(a, b, n: int):
    """n-th derivative at 0 of ``exp(a u + b u^2)``."""
    total = 0.0
    for k in range(n // 2 + 1):
        total = total + a ** (n - 2 * k) * b**k / (math.factorial(n - 2 * k) * math.factorial(k))
    return math.factorial(n) * total


def diagonal_derivatives(
    kind: KernelKind | str, grid: PhaseGrid, max_order: int
) -> dict[tuple[int, int], np.ndarray]:
    """``d^p/dlambda'^p d^q/dmu'^q K`` on the diagonal ``(lambda', mu') = (lambda, mu)``.

    Single-mode only. Keys ``(p, q)`` with ``p + q <= max_order``; ``(0, 0)``
    is identically zero because every kernel vanishes on the diagonal.
    Writing ``lambda' = lambda + u``, ``mu' = mu + v`` the exponent of
    ``exp(sE +- i hbar S / 2)`` separates into ``a u + b u^2`` and ``c v + d v^2``,
    whose Taylor coefficients are Hermite-type sums.
    """
    kind = KernelKind(kind)
    if grid.dims != 1:
        raise ValueError("diagonal derivatives are implemented for single-mode grids")
    (lam,), (mu,) = grid.mesh()
    hbar, omega = grid.hbar, grid.omega
    out: dict[tuple[int, int], np.ndarray] = {}
    zero = np.zeros_like(lam)
    if kind is Ordering.CLASSICAL:
        for p in range(max_order + 1):
            for q in range(max_order + 1 - p):
                out[(p, q)] = zero
        if max_order >= 1:
            out[(1, 0)] = -mu
            out[(0, 1)] = lam
        return out
    s = {Ordering.NORMAL: 1.0, Ordering.SYMMETRIC: 0.0, Ordering.ANTINORMAL: -1.0}[kind]
    b_u = -s * hbar / (2 * omega)
    b_v = -s * hbar * omega / 2
    base_u = -s * hbar * lam / (2 * omega)
    base_v = -s * hbar * omega * mu / 2
    for p in range(max_order + 1):
        for q in range(max_order + 1 - p):
            plus = _gauss_taylor(base_u - 0.5j * hbar * mu, b_u, p) * _gauss_taylor(
                base_v + 0.5j * hbar * lam, b_v, q
            )
            minus = _gauss_taylor(base_u + 0.5j * hbar * mu, b_u, p) * _gauss_taylor(
                base_v - 0.5j * hbar * lam, b_v, q
            )
            out[(p, q)] = np.real((plus - minus) / (1j * hbar)) * np.ones_like(lam)
    return out


class KernelCache:
    """Materialised kernel slabs ``K[out_node, in_node]`` for the quadrature path.

    Tables are built lazily per (kind, grid) and kept only while their total
    size stays under ``max_bytes``; otherwise slabs are recomputed on demand.
    """

    def __init__(self, max_bytes: int = 256 * 2**20):
        self.max_bytes = max_bytes
        self._tables: dict = {}

    def slab(self, kind: KernelKind, grid: PhaseGrid, rows: slice) -> np.ndarray:
        key = (KernelKind(kind), grid)
        table = self._tables.get(key)
        if table is not None:
            return table[rows]
        full_bytes = grid.size**2 * 8
        if full_bytes + self.nbytes <= self.max_bytes:
            table = _kernel_table(kind, grid, slice(0, grid.size))
            self._tables[key] = table
            return table[rows]
        return _kernel_table(kind, grid, rows)

    @property
    def nbytes(self) -> int:
        return sum(t.nbytes for t in self._tables.values())

    def clear(self) -> None:
        self._tables.clear()


def _flat_coords(grid: PhaseGrid) -> tuple[np.ndarray, np.ndarray]:
    lams, mus = grid.mesh()
    lam = np.stack([l.ravel() for l in lams], axis=-1)
    mu = np.stack([m.ravel() for m in mus], axis=-1)
    return lam, mu


def _kernel_table(kind, grid: PhaseGrid, rows: slice) -> np.ndarray:
    lam, mu = _flat_coords(grid)
    return eval_kernel(
        kind,
        lam[rows, None, :],
        mu[rows, None, :],
        lam[None, :, :],
        mu[None, :, :],
        hbar=grid.hbar,
        omega=grid.omega,
        vector=True,
    )

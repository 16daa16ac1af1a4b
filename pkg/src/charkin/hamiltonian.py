"""Polynomial Hamiltonians in ladder operators and their characteristic forms.

A :class:`PolyHamiltonian` stores normal-ordered coefficients ``c[j, k]`` of
``a^dagger^j a^k``. Re-ordering (to Weyl or antinormal) happens on the operator
level with exact combinatorial factors, never by multiplying distributions by
Gaussians.

The characteristic form of a polynomial is a finite sum of derivatives of
delta functions, ``H(lambda, mu) = sum d[j, k] d^j_lambda d^k_mu delta(lambda) delta(mu)``.
With ``H(x, p) = int H(lambda, mu) exp(-i(lambda x + mu p))`` the coefficients
follow from the phase-space symbol ``sum h[j, k] x^j p^k`` as
``d[j, k] = (-i)^(j+k) h[j, k]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .fock import operator_charfn
from .grid import CharField, Ordering, PhaseGrid, difference_grid, xi_field

MAX_DEGREE = 6

# Normalisation of the grid-sampled Hamiltonian path relative to the
# distributional one; fixed by oracle calibration (see tests).
GRID_HAMILTONIAN_KAPPA = 1.0


def _clean(terms: Mapping, tol: float = 0.0) -> dict:
    return {k: complex(v) for k, v in terms.items() if abs(v) > tol}


class PolyHamiltonian:
    """Normal-ordered polynomial ``sum c[j, k] a^dagger^j a^k``."""

    def __init__(self, terms: Mapping[tuple[int, int], complex] | Iterable | None = None):
        if terms is None:
            terms = {}
        elif not isinstance(terms, Mapping):
            terms = _terms_from_rows(terms)
        out: dict[tuple[int, int], complex] = {}
        for (j, k), c in terms.items():
            if j < 0 or k < 0:
                raise ValueError("ladder powers must be non-negative")
            out[(int(j), int(k))] = out.get((int(j), int(k)), 0) + complex(c)
        self.terms = _clean(out)

    # -- construction -----------------------------------------------------
    @classmethod
    def identity(cls, c: complex = 1.0) -> "PolyHamiltonian":
        return cls({(0, 0): c})

    @classmethod
    def annihilation(cls) -> "PolyHamiltonian":
        return cls({(0, 1): 1.0})

    @classmethod
    def creation(cls) -> "PolyHamiltonian":
        return cls({(1, 0): 1.0})

    @classmethod
    def position(cls, hbar: float = 1.0, omega: float = 1.0) -> "PolyHamiltonian":
        s = math.sqrt(hbar / (2 * omega))
        return cls({(1, 0): s, (0, 1): s})

    @classmethod
    def momentum(cls, hbar: float = 1.0, omega: float = 1.0) -> "PolyHamiltonian":
        s = math.sqrt(hbar * omega / 2)
        return cls({(1, 0): 1j * s, (0, 1): -1j * s})

    @classmethod
    def harmonic(cls, hbar: float = 1.0, omega: float = 1.0) -> "PolyHamiltonian":
        """``hbar omega (a^dagger a + 1/2)``."""
        return cls({(1, 1): hbar * omega, (0, 0): hbar * omega / 2})

    @classmethod
    def kerr(cls, chi: float = 1.0) -> "PolyHamiltonian":
        """``chi (a^dagger a)^2 = chi (a^dagger^2 a^2 + a^dagger a)``."""
        return cls({(2, 2): chi, (1, 1): chi})

    @classmethod
    def anharmonic(cls, quartic: float, hbar: float = 1.0, omega: float = 1.0) -> "PolyHamiltonian":
        """``p^2/2 + omega^2 x^2/2 + quartic * x^4``."""
        x = cls.position(hbar, omega)
        return cls.harmonic(hbar, omega) + quartic * x**4

    @classmethod
    def from_xp(cls, symbol: "XPPoly", hbar: float = 1.0, omega: float = 1.0) -> "PolyHamiltonian":
        """Weyl quantisation of a phase-space polynomial (symmetrised products)."""
        x = cls.position(hbar, omega)
        p = cls.momentum(hbar, omega)
        out = cls()
        for (j, k), h in symbol.terms.items():
            # Weyl ordering of x^j p^k is the average over all orderings, which
            # equals the symmetric expansion of (s x + t p)^(j+k).
            out = out + h * _weyl_monomial(x, p, j, k)
        return out

    @property
    def degree(self) -> int:
        return max((j + k for j, k in self.terms), default=0)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        for (j, k), c in self.terms.items():
            if abs(c - np.conj(self.terms.get((k, j), 0))) > tol * max(1.0, abs(c)):
                return False
        return True

    def adjoint(self) -> "PolyHamiltonian":
        return PolyHamiltonian({(k, j): np.conj(c) for (j, k), c in self.terms.items()})

    # -- algebra ----------------------------------------------------------
    def __add__(self, other: "PolyHamiltonian") -> "PolyHamiltonian":
        out = dict(self.terms)
        for key, c in other.terms.items():
            out[key] = out.get(key, 0) + c
        return PolyHamiltonian(out)

    def __sub__(self, other: "PolyHamiltonian") -> "PolyHamiltonian":
        return self + (-1.0) * other

    def __rmul__(self, scalar) -> "PolyHamiltonian":
        return PolyHamiltonian({k: scalar * c for k, c in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, PolyHamiltonian):
            return other * self
        out: dict[tuple[int, int], complex] = {}
        for (j1, k1), c1 in self.terms.items():
            for (j2, k2), c2 in other.terms.items():
                # a^k1 a^dagger^j2 = sum_r r! C(k1, r) C(j2, r) a^dagger^(j2-r) a^(k1-r)
                for r in range(min(k1, j2) + 1):
                    w = math.factorial(r) * math.comb(k1, r) * math.comb(j2, r)
                    key = (j1 + j2 - r, k1 + k2 - r)
                    out[key] = out.get(key, 0) + c1 * c2 * w
        return PolyHamiltonian(out)

    def __pow__(self, n: int) -> "PolyHamiltonian":
        out = PolyHamiltonian.identity()
        for _ in range(n):
            out = out * self
        return out

    def __repr__(self) -> str:
        return f"PolyHamiltonian({self.terms!r})"

    def rows(self) -> list[list[float]]:
        """Config-file form ``[[j, k, re, im], ...]``."""
        return [[j, k, c.real, c.imag] for (j, k), c in sorted(self.terms.items())]

    # -- representations ------------------------------------------------------
    def matrix(self, n_max: int) -> np.ndarray:
        """Exact ``P H P`` on the first ``n_max`` number states."""
        out = np.zeros((n_max, n_max), dtype=complex)
        logf = [math.lgamma(n + 1) for n in range(n_max)]
        for (j, k), c in self.terms.items():
            for n in range(k, n_max):
                m = n - k + j
                if m >= n_max:
                    continue
                out[m, n] += c * math.exp(0.5 * (logf[n] - logf[n - k] + logf[m] - logf[n - k]))
        return out

    def alpha_symbol(self, ordering: Ordering | str) -> dict[tuple[int, int], complex]:
        """Ordered symbol as coefficients of ``conj(alpha)^j alpha^k``.

        normal -> the normal symbol itself; symmetric -> Weyl symbol;
        antinormal -> antinormal symbol. Classical uses the Weyl symbol.
        """
        ordering = Ordering(ordering)
        shift = {
            Ordering.NORMAL: 0.0,
            Ordering.SYMMETRIC: -0.5,
            Ordering.CLASSICAL: -0.5,
            Ordering.ANTINORMAL: -1.0,
        }[ordering]
        out: dict[tuple[int, int], complex] = {}
        for (j, k), c in self.terms.items():
            for r in range(min(j, k) + 1):
                w = shift**r / math.factorial(r) * math.perm(j, r) * math.perm(k, r)
                out[(j - r, k - r)] = out.get((j - r, k - r), 0) + c * w
        return _clean(out)

    def symbol(self, ordering: Ordering | str, hbar: float = 1.0, omega: float = 1.0) -> "XPPoly":
        """Ordered symbol as a polynomial in ``(x, p)``."""
        r = math.sqrt(2 * hbar * omega)
        alpha = XPPoly({(1, 0): omega / r, (0, 1): 1j / r})
        alpha_bar = XPPoly({(1, 0): omega / r, (0, 1): -1j / r})
        out = XPPoly()
        for (j, k), c in self.alpha_symbol(ordering).items():
            out = out + c * (alpha_bar**j * alpha**k)
        return out.cleaned()

    def weyl_symbol(self, hbar: float = 1.0, omega: float = 1.0) -> "XPPoly":
        return self.symbol(Ordering.SYMMETRIC, hbar, omega)


def _terms_from_rows(rows) -> dict:
    out: dict[tuple[int, int], complex] = {}
    for row in rows:
        if len(row) == 3:
            j, k, c = row
        elif len(row) == 4:
            j, k, re, im = row
            c = complex(re, im)
        else:
            raise ValueError(f"term row must be [j, k, re, im], got {row!r}")
        if int(j) != j or int(k) != k:
            raise ValueError(f"term powers must be integers, got {row!r}")
        key = (int(j), int(k))
        out[key] = out.get(key, 0) + complex(c)
    return out


def _weyl_monomial(x: PolyHamiltonian, p: PolyHamiltonian, j: int, k: int) -> PolyHamiltonian:
    # average over the distinct words with j x's and k p's
    from itertools import combinations

    n = j + k
    total = PolyHamiltonian()
    count = 0
    for x_slots in combinations(range(n), j):
        word = PolyHamiltonian.identity()
        slots = set(x_slots)
        for i in range(n):
            word = word * (x if i in slots else p)
        total = total + word
        count += 1
    return (1.0 / count) * total


class XPPoly:
    """Polynomial ``sum h[j, k] x^j p^k`` on phase space."""

    def __init__(self, terms: Mapping[tuple[int, int], complex] | Iterable | None = None):
        if terms is None:
            terms = {}
        elif not isinstance(terms, Mapping):
            terms = _terms_from_rows(terms)
        self.terms = {(int(j), int(k)): complex(c) for (j, k), c in terms.items() if c != 0}

    @property
    def degree(self) -> int:
        return max((j + k for j, k in self.terms), default=0)

    def __add__(self, other: "XPPoly") -> "XPPoly":
        out = dict(self.terms)
        for key, c in other.terms.items():
            out[key] = out.get(key, 0) + c
        return XPPoly(out)

    def __rmul__(self, scalar) -> "XPPoly":
        return XPPoly({k: scalar * c for k, c in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, XPPoly):
            return other * self
        out: dict[tuple[int, int], complex] = {}
        for (j1, k1), c1 in self.terms.items():
            for (j2, k2), c2 in other.terms.items():
                key = (j1 + j2, k1 + k2)
                out[key] = out.get(key, 0) + c1 * c2
        return XPPoly(out)

    def __pow__(self, n: int) -> "XPPoly":
        out = XPPoly({(0, 0): 1.0})
        for _ in range(n):
            out = out * self
        return out

    def __repr__(self) -> str:
        return f"XPPoly({self.terms!r})"

    def cleaned(self, tol: float = 1e-14) -> "XPPoly":
        scale = max((abs(c) for c in self.terms.values()), default=1.0)
        out = {}
        for key, c in self.terms.items():
            re = c.real if abs(c.real) > tol * scale else 0.0
            im = c.imag if abs(c.imag) > tol * scale else 0.0
            if re or im:
                out[key] = complex(re, im)
        return XPPoly(out)

    def is_real(self, tol: float = 1e-12) -> bool:
        return all(abs(c.imag) <= tol * max(1.0, abs(c)) for c in self.terms.values())

    def derivative(self, dx: int = 0, dp: int = 0) -> "XPPoly":
        out = {}
        for (j, k), c in self.terms.items():
            if j >= dx and k >= dp:
                out[(j - dx, k - dp)] = c * math.perm(j, dx) * math.perm(k, dp)
        return XPPoly(out)

    def __call__(self, x, p):
        x = np.asarray(x)
        p = np.asarray(p)
        out = np.zeros(np.broadcast(x, p).shape, dtype=complex)
        for (j, k), c in self.terms.items():
            out = out + c * x**j * p**k
        return out

    def rows(self) -> list[list[float]]:
        return [[j, k, c.real, c.imag] for (j, k), c in sorted(self.terms.items())]


# -- characteristic representations ---------------------------------------------

@dataclass
class GridSampled:
    """Grid samples of a Hamiltonian characteristic function.

    ``difference`` optionally holds samples on the difference lattice of the
    grid (``2G`` nodes per axis, same spacing, see :func:`difference_grid`),
    which the quadrature needs to evaluate ``H(lambda - lambda')`` for every
    pair of nodes. Without it the grid samples are zero-padded.
    """

    field: CharField
    flags: dict = field(default_factory=dict)
    difference: np.ndarray | None = None

    def __post_init__(self):
        if self.difference is not None:
            shape = tuple(2 * g for g in self.field.grid.shape)
            if self.difference.shape != shape:
                raise ValueError(f"difference samples must have shape {shape}")

    def lattice(self) -> np.ndarray:
        """``H`` on the difference lattice; node ``k`` sits at offset ``k - G``."""
        if self.difference is not None:
            return self.difference
        h = self.field.data
        out = np.zeros(tuple(2 * g for g in h.shape), dtype=complex)
        out[tuple(slice(g // 2, g // 2 + g) for g in h.shape)] = h
        return out

    @property
    def ordering(self) -> Ordering:
        return self.field.ordering

    @property
    def grid(self) -> PhaseGrid:
        return self.field.grid


@dataclass
class Distributional:
    """``sum d[j, k] d^j_lambda d^k_mu delta(lambda) delta(mu)`` in a given ordering."""

    terms: dict[tuple[int, int], complex]
    ordering: Ordering

    def __post_init__(self):
        self.ordering = Ordering(self.ordering)
        for key, d in self.terms.items():
            if not np.isfinite(d):
                raise ValueError(f"non-finite coefficient at {key}")

    @property
    def degree(self) -> int:
        return max((j + k for j, k in self.terms), default=0)

    def phase_symbol(self) -> XPPoly:
        """Back-transform to the phase-space symbol ``sum h x^j p^k``."""
        return XPPoly({(j, k): d * (1j) ** (j + k) for (j, k), d in self.terms.items()})


HamCharRep = GridSampled | Distributional


def distributional_from_symbol(symbol: XPPoly, ordering: Ordering | str) -> Distributional:
    if symbol.degree > MAX_DEGREE:
        raise ValueError(f"degree overflow: {symbol.degree} > {MAX_DEGREE}")
    terms = {(j, k): h * (-1j) ** (j + k) for (j, k), h in symbol.terms.items()}
    return Distributional(terms, Ordering(ordering))


def ham_distributional(
    ham: PolyHamiltonian, ordering: Ordering | str, hbar: float = 1.0, omega: float = 1.0
) -> Distributional:
    """Delta-derivative coefficients of the ordering's Hamiltonian characteristic function.

    The normal-order characteristic function of ``H`` pairs with its antinormal
    symbol and vice versa (the Gaussian factors flip sides under the transform);
    the symmetric and classical ones pair with the Weyl symbol.
    """
    ordering = Ordering(ordering)
    if ham.degree > MAX_DEGREE:
        raise ValueError(f"degree overflow: {ham.degree} > {MAX_DEGREE}")
    symbol_order = {
        Ordering.NORMAL: Ordering.ANTINORMAL,
        Ordering.ANTINORMAL: Ordering.NORMAL,
        Ordering.SYMMETRIC: Ordering.SYMMETRIC,
        Ordering.CLASSICAL: Ordering.SYMMETRIC,
    }[ordering]
    return distributional_from_symbol(ham.symbol(symbol_order, hbar, omega), ordering)


def ham_charfn_grid(
    ham: PolyHamiltonian,
    grid: PhaseGrid,
    ordering: Ordering | str,
    n_max: int = 20,
    check_divergence: bool = True,
    lattice: bool = True,
) -> GridSampled:
    """``(hbar / 2 pi) Tr[P H P E(xi)]`` sampled on the grid.

    Only meaningful as the characteristic function of the truncated operator
    ``P H P``; the continuum object is a distribution. Classical ordering
    samples the symmetric form. With ``lattice`` the samples are also taken
    on the difference lattice used by the quadrature.
    """
    ordering = Ordering(ordering)
    flags: dict = {"n_max": n_max}
    if lattice:
        big = difference_grid(grid)
        diff = _truncated_samples(ham, big, ordering, n_max)
        values = diff[tuple(slice(g // 2, g // 2 + g) for g in grid.shape)].copy()
    else:
        diff = None
        values = _truncated_samples(ham, grid, ordering, n_max)
    if check_divergence:
        wider = _truncated_samples(ham, grid, ordering, n_max + 4)
        edge = _edge_mask(grid)
        a, b = np.linalg.norm(values[edge]), np.linalg.norm(wider[edge])
        scale = max(np.linalg.norm(values), 1e-300)
        if abs(b - a) > 1e-3 * scale:
            flags["truncation_divergence"] = True
    return GridSampled(CharField(grid, values, ordering), flags, diff)


def _truncated_samples(ham, grid, ordering, n_max):
    trace_order = Ordering.SYMMETRIC if ordering is Ordering.CLASSICAL else ordering
    values = operator_charfn(ham.matrix(n_max), grid, trace_order)
    return GRID_HAMILTONIAN_KAPPA * grid.hbar / (2 * np.pi) * values


def _edge_mask(grid: PhaseGrid) -> np.ndarray:
    mask = np.zeros(grid.shape, dtype=bool)
    for axis in range(len(grid.shape)):
        idx = [slice(None)] * len(grid.shape)
        idx[axis] = 0
        mask[tuple(idx)] = True
        idx[axis] = -1
        mask[tuple(idx)] = True
    return mask


def gaussian_symbol_charfn(grid: PhaseGrid, ordering: Ordering | str, width: float = 1.0,
                           amplitude: float = 1.0) -> GridSampled:
    """Characteristic function of the bounded symbol ``amplitude * exp(-(x^2 + p^2) / (2 width^2))``.

    A smooth, decaying Hamiltonian symbol for exercising the quadrature path
    where polynomial symbols are distributional. Returned in the requested
    ordering via the Gaussian multipliers of the characteristic functions.
    """
    ordering = Ordering(ordering)

    def sample(g: PhaseGrid) -> np.ndarray:
        lams, mus = g.mesh()
        k2 = sum(l**2 for l in lams) + sum(m**2 for m in mus)
        # H(lambda, mu) = (2 pi)^-2N int H(x, p) exp(+i(lambda x + mu p))
        sym = amplitude * (width**2 / (2 * np.pi)) ** g.dims * np.exp(-0.5 * width**2 * k2)
        _, abs2 = xi_field(g)
        mult = {
            Ordering.NORMAL: np.exp(abs2 / 2),
            Ordering.ANTINORMAL: np.exp(-abs2 / 2),
        }.get(ordering, 1.0)
        return (sym * mult).astype(complex)

    return GridSampled(CharField(grid, sample(grid), ordering), {}, sample(difference_grid(grid)))

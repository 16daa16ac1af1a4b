"""Construction, ordering conversion and invariant checks for characteristic functions."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid import CharField, Ordering, PhaseGrid, make_grid, xi_field

STATE_KINDS = ("coherent", "fock", "thermal", "cat")


@dataclass(frozen=True)
class StateSpec:
    """Test-state library entry, shared by grid constructors and the oracle."""

    kind: str
    alpha: complex = 0.0
    n: int = 0
    nbar: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in STATE_KINDS:
            raise ValueError(f"unknown state kind {self.kind!r}; expected one of {STATE_KINDS}")
        if not np.isfinite(complex(self.alpha)) or not math.isfinite(self.nbar) \
                or not math.isfinite(self.phase):
            raise ValueError("state parameters must be finite")
        if self.kind == "fock" and (int(self.n) != self.n or self.n < 0):
            raise ValueError("Fock level must be a non-negative integer")
        if self.kind == "thermal" and self.nbar < 0:
            raise ValueError("thermal occupation must be non-negative")

    @classmethod
    def from_dict(cls, d: dict) -> "StateSpec":
        d = dict(d)
        if "alpha" in d:
            a = d["alpha"]
            d["alpha"] = complex(a[0], a[1]) if isinstance(a, (list, tuple)) else complex(a)
        return cls(**d)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind in ("coherent", "cat"):
            out["alpha"] = [complex(self.alpha).real, complex(self.alpha).imag]
        if self.kind == "cat":
            out["phase"] = self.phase
        if self.kind == "fock":
            out["n"] = int(self.n)
        if self.kind == "thermal":
            out["nbar"] = self.nbar
        return out

    def density(self, n_max: int):
        from . import fock

        if self.kind == "coherent":
            return fock.coherent_density(complex(self.alpha), n_max)
        if self.kind == "fock":
            return fock.fock_density(int(self.n), n_max)
        if self.kind == "thermal":
            return fock.thermal_density(self.nbar, n_max)
        return fock.cat_density(complex(self.alpha), self.phase, n_max)


def _ordering_exponent(ordering: Ordering) -> float:
    # C_o = exp(e_o |xi|^2) C_s
    return {Ordering.NORMAL: 0.5, Ordering.SYMMETRIC: 0.0, Ordering.ANTINORMAL: -0.5}[ordering]


def convert_ordering(C: CharField, target: Ordering | str) -> CharField:
    """Change ordering by the Gaussian multipliers ``C_n = e^{|xi|^2/2} C_s = e^{|xi|^2} C_a``."""
    target = Ordering(target)
    if not (C.ordering.is_quantum and target.is_quantum):
        raise ValueError("classical fields cannot be converted to or from quantum orderings")
    if target is C.ordering:
        return C.copy()
    _, abs2 = xi_field(C.grid)
    factor = np.exp((_ordering_exponent(target) - _ordering_exponent(C.ordering)) * abs2)
    return C.copy(C.data * factor, ordering=target)


def as_classical(C: CharField) -> CharField:
    """Reinterpret a symmetric-order field (a Wigner function) as a classical distribution."""
    if C.ordering is not Ordering.SYMMETRIC:
        raise ValueError("only symmetric-order fields map onto classical distributions")
    return C.copy(ordering=Ordering.CLASSICAL)


def reflected(data: np.ndarray) -> np.ndarray:
    """Values at ``(-lambda, -mu)`` on nodes whose mirror image lies on the grid.

    Node 0 of every axis (at ``-L``) has no mirror; those entries are NaN.
    """
    out = np.full(data.shape, np.nan, dtype=complex)
    inner = tuple(slice(1, None) for _ in data.shape)
    out[inner] = data[inner][tuple(slice(None, None, -1) for _ in data.shape)]
    return out


def hermiticity_defect(C: CharField) -> float:
    diff = reflected(C.data) - np.conj(C.data)
    return float(np.nanmax(np.abs(diff)))


def check_invariants(C: CharField, mask: np.ndarray | None = None, bounds: bool = True) -> dict:
    """Normalisation, Hermiticity and ordering-bound defects of a field.

    Bounds: ``|C_s| <= 1``, ``|C_n| <= e^{|xi|^2/2}``, ``|C_a| <= e^{-|xi|^2/2}``.
    ``mask`` restricts the bound check (e.g. to the oracle validity region).
    """
    report = {
        "normalization": abs(C.origin_value - 1.0),
        "hermiticity": hermiticity_defect(C),
        "bound_violation": 0.0,
    }
    if bounds and C.ordering.is_quantum:
        _, abs2 = xi_field(C.grid)
        excess = np.abs(C.data) - np.exp(_ordering_exponent(C.ordering) * abs2)
        if mask is not None:
            excess = excess[mask]
        report["bound_violation"] = float(max(0.0, np.max(excess)))
    return report


def make_state_charfn(
    spec: StateSpec | Sequence[StateSpec],
    grid: PhaseGrid,
    ordering: Ordering | str,
    n_max: int = 32,
) -> CharField:
    """Sample a state's characteristic function through the Fock oracle.

    For ``grid.dims > 1`` pass one spec per mode; the product state's
    characteristic function is the product of the single-mode ones.
    """
    from .fock import density_to_charfn

    ordering = Ordering(ordering)
    specs = [spec] if isinstance(spec, StateSpec) else list(spec)
    if len(specs) != grid.dims:
        raise ValueError(f"need one state spec per mode ({grid.dims}), got {len(specs)}")
    if grid.dims == 1:
        field = density_to_charfn(specs[0].density(n_max), grid, ordering)
        field.flags["state_kind"] = specs[0].kind
        return field
    factors = []
    flags: dict = {}
    for i, s in enumerate(specs):
        sub = make_grid(
            1, grid.extent_lambda[i], grid.extent_mu[i], grid.points[i], grid.hbar, grid.omega
        )
        f = density_to_charfn(s.density(n_max), sub, ordering)
        flags.update(f.flags)
        factors.append(f.data)
    n = grid.dims
    letters = "abcdefgh"
    # mode i owns lambda axis i and mu axis n+i
    subs = [letters[i] + letters[n + i] for i in range(n)]
    out = letters[:n] + letters[n:2 * n]
    data = np.einsum(",".join(subs) + "->" + out, *factors)
    field = CharField(grid, data, ordering)
    field.flags.update(flags)
    return field


# -- moments ------------------------------------------------------------------

def fd_weights(order: int, half_width: int) -> np.ndarray:
    """Central finite-difference weights on ``-h..h`` nodes (unit spacing)."""
    offsets = np.arange(-half_width, half_width + 1, dtype=float)
    n = offsets.size
    vander = np.vander(offsets, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(vander, rhs)


def _fd_partial(C: CharField, a: int, b: int) -> complex:
    """4th-order central difference ``d^a_lambda d^b_mu C`` at the origin."""
    grid = C.grid
    o = grid.origin_index
    wa = fd_weights(a, (a + 1) // 2 + 1) if a else np.array([1.0])
    wb = fd_weights(b, (b + 1) // 2 + 1) if b else np.array([1.0])
    ha, hb = len(wa) // 2, len(wb) // 2
    block = C.data[o[0] - ha:o[0] + ha + 1, o[1] - hb:o[1] + hb + 1]
    return complex(wa @ block @ wb) / (grid.d_lambda[0] ** a * grid.d_mu[0] ** b)


def moments_from_charfn(C: CharField, m: int, n: int) -> complex:
    """``<a^dagger^m a^n>`` as derivatives of ``C_n`` w.r.t. ``i conj(xi)`` and ``i xi`` at 0."""
    if C.ordering is not Ordering.NORMAL:
        raise ValueError("moments need a normal-order field; convert explicitly")
    if C.grid.dims != 1:
        raise ValueError("moments are implemented for single-mode fields")
    if m < 0 or n < 0 or m + n > 4:
        raise ValueError("moment orders must satisfy m + n <= 4")
    grid = C.grid
    s = math.sqrt(grid.hbar / (2 * grid.omega))
    w = grid.omega
    # d/d(i xi) = -i/(2s) (d_l + (i/w) d_m);  d/d(i conj xi) = -i/(2s) (d_l - (i/w) d_m)
    # bivariate expansion of (d_l - i/w d_m)^m (d_l + i/w d_m)^n
    coeffs: dict[tuple[int, int], complex] = {(0, 0): 1.0}
    for factor in [-1j / w] * m + [1j / w] * n:
        nxt: dict[tuple[int, int], complex] = {}
        for (a, b), c in coeffs.items():
            nxt[(a + 1, b)] = nxt.get((a + 1, b), 0) + c
            nxt[(a, b + 1)] = nxt.get((a, b + 1), 0) + c * factor
        coeffs = nxt
    total = sum(c * _fd_partial(C, a, b) for (a, b), c in coeffs.items())
    return complex((-1j / (2 * s)) ** (m + n) * total)

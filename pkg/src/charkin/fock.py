"""Truncated Fock-space ground truth.

Dense number-basis matrices for the ladder algebra, exact unitary evolution,
and the maps between density matrices and characteristic functions. Everything
in here is independent of the kernel machinery and serves as its oracle.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import linalg, special

from .grid import CharField, Ordering, PhaseGrid, fourier_to_phase, xi_field

log = logging.getLogger(__name__)

# CONVENTION: the P-function inverse needs no extra constant under the grid
# Fourier convention; kept as a named constant so a regression test pins it.
FOCK_INVERSE_KAPPA = 1.0

MAX_FOCK_DIM = 64

# state kinds whose Glauber P function is too singular for the grid inverse
SINGULAR_P_KINDS = ("fock", "cat")


class LadderOps(NamedTuple):
    a: np.ndarray
    adag: np.ndarray
    x: np.ndarray
    p: np.ndarray


@dataclass
class FockDensity:
    rho: np.ndarray

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=complex)
        if self.rho.ndim != 2 or self.rho.shape[0] != self.rho.shape[1]:
            raise ValueError("density matrix must be square")

    @property
    def n_max(self) -> int:
        return self.rho.shape[0]

    def defects(self) -> dict:
        rho = self.rho
        return {
            "hermiticity": float(np.max(np.abs(rho - rho.conj().T))),
            "trace": float(abs(np.trace(rho) - 1.0)),
            "min_eigenvalue": float(np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)))),
        }

    def check(self, herm_tol=1e-12, trace_tol=1e-10, eig_tol=1e-10) -> None:
        d = self.defects()
        if d["hermiticity"] > herm_tol:
            raise ValueError(f"density not Hermitian (defect {d['hermiticity']:.3e})")
        if d["trace"] > trace_tol:
            raise ValueError(f"density trace defect {d['trace']:.3e}")
        if d["min_eigenvalue"] < -eig_tol:
            raise ValueError(f"density has negative eigenvalue {d['min_eigenvalue']:.3e}")

    def purity(self) -> float:
        return float(np.real(np.trace(self.rho @ self.rho)))


def build_ops(n_max: int, hbar: float = 1.0, omega: float = 1.0) -> LadderOps:
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    a = np.diag(np.sqrt(np.arange(1, n_max, dtype=float)), k=1).astype(complex)
    adag = a.conj().T
    x = np.sqrt(hbar / (2 * omega)) * (adag + a)
    p = 1j * np.sqrt(hbar * omega / 2) * (adag - a)
    return LadderOps(a, adag, x, p)


# -- states -------------------------------------------------------------------

def coherent_amplitudes(alpha: complex, n_max: int) -> np.ndarray:
    n = np.arange(n_max)
    log_fact = special.gammaln(n + 1)
    if alpha == 0:
        amp = np.zeros(n_max, dtype=complex)
        amp[0] = 1.0
        return amp
    return np.exp(-abs(alpha) ** 2 / 2 + n * np.log(complex(alpha)) - 0.5 * log_fact)


def _pure(vec: np.ndarray) -> FockDensity:
    vec = vec / np.linalg.norm(vec)
    return FockDensity(np.outer(vec, vec.conj()))


def coherent_density(alpha: complex, n_max: int) -> FockDensity:
    return _pure(coherent_amplitudes(alpha, n_max))


def fock_density(n: int, n_max: int) -> FockDensity:
    if not 0 <= n < n_max:
        raise ValueError(f"Fock level {n} outside truncation {n_max}")
    vec = np.zeros(n_max, dtype=complex)
    vec[n] = 1.0
    return _pure(vec)


def thermal_density(nbar: float, n_max: int) -> FockDensity:
    if nbar < 0:
        raise ValueError("mean occupation must be non-negative")
    if nbar == 0:
        return fock_density(0, n_max)
    q = nbar / (1.0 + nbar)
    pops = q ** np.arange(n_max)
    return FockDensity(np.diag(pops / pops.sum()).astype(complex))


def cat_density(alpha: complex, phase: float, n_max: int) -> FockDensity:
    vec = coherent_amplitudes(alpha, n_max) + np.exp(1j * phase) * coherent_amplitudes(-alpha, n_max)
    if np.linalg.norm(vec) < 1e-12:
        raise ValueError("cat superposition vanishes for these parameters")
    return _pure(vec)


def fidelity(rho: FockDensity, sigma: FockDensity) -> float:
    """Uhlmann fidelity (squared convention)."""
    sq = linalg.sqrtm(rho.rho)
    inner = linalg.sqrtm(sq @ sigma.rho @ sq)
    return float(np.real(np.trace(inner)) ** 2)


# -- dynamics -----------------------------------------------------------------

def von_neumann_evolve(rho0: FockDensity, hamiltonian: np.ndarray, t: float, hbar: float = 1.0) -> FockDensity:
    """``rho(t) = U rho0 U^dagger`` with ``U = exp(-i H t / hbar)`` from an eigendecomposition."""
    h = np.asarray(hamiltonian, dtype=complex)
    if np.max(np.abs(h - h.conj().T)) > 1e-12 * max(1.0, np.max(np.abs(h))):
        raise ValueError("Hamiltonian matrix is not Hermitian")
    if t == 0:
        return FockDensity(rho0.rho.copy())
    evals, evecs = np.linalg.eigh(h)
    u = (evecs * np.exp(-1j * evals * t / hbar)) @ evecs.conj().T
    return FockDensity(u @ rho0.rho @ u.conj().T)


def von_neumann_rate(rho: FockDensity, hamiltonian: np.ndarray, hbar: float = 1.0) -> np.ndarray:
    """Exact ``d rho / dt`` at the current state."""
    r, h = rho.rho, np.asarray(hamiltonian, dtype=complex)
    return (1j / hbar) * (r @ h - h @ r)


def charfn_rate(rho: FockDensity, hamiltonian: np.ndarray, grid: PhaseGrid,
                ordering: Ordering | str, dt: float | None = 1e-4) -> np.ndarray:
    """Oracle ``dC/dt`` at t = 0.

    With ``dt`` a central difference of characteristic functions of the
    evolved densities at ``+-dt``; with ``dt=None`` the exact commutator.
    """
    if dt is None:
        return operator_charfn(von_neumann_rate(rho, hamiltonian, grid.hbar), grid, ordering)
    plus = von_neumann_evolve(rho, hamiltonian, dt, grid.hbar)
    minus = von_neumann_evolve(rho, hamiltonian, -dt, grid.hbar)
    return operator_charfn(plus.rho - minus.rho, grid, ordering) / (2 * dt)


# -- characteristic functions -------------------------------------------------

def displacement_elements(beta: np.ndarray, n_max: int) -> np.ndarray:
    """Exact ``<m|D(beta)|n>`` for ``m, n < n_max``, shape ``beta.shape + (n_max, n_max)``.

    Closed Laguerre form of the finite normal-ordered sum; avoids the cancellation
    of the raw power series at large ``|beta|``.
    """
    beta = np.asarray(beta, dtype=complex)[..., None, None]
    x = np.abs(beta) ** 2
    m = np.arange(n_max)[:, None]
    n = np.arange(n_max)[None, :]
    lo = np.minimum(m, n)
    diff = np.abs(m - n)
    lag = special.eval_genlaguerre(lo, diff, x)
    log_pref = 0.5 * (special.gammaln(lo + 1) - special.gammaln(lo + diff + 1)) - x / 2
    with np.errstate(divide="ignore", invalid="ignore"):
        mag = np.where(diff > 0, np.abs(beta) ** diff, 1.0)
        phase_src = np.where(m >= n, beta, -np.conj(beta))
        unit = np.where(np.abs(phase_src) > 0, phase_src / np.abs(phase_src), 0.0)
    return np.exp(log_pref) * lag * mag * unit**diff


def _ordering_gaussian(abs2: np.ndarray, ordering: Ordering) -> np.ndarray:
    if ordering is Ordering.NORMAL:
        return np.exp(abs2 / 2)
    if ordering is Ordering.ANTINORMAL:
        return np.exp(-abs2 / 2)
    return np.ones_like(abs2)


def operator_charfn(
    op: np.ndarray, grid: PhaseGrid, ordering: Ordering | str, chunk: int = 1024
) -> np.ndarray:
    """``Tr[op * E(xi)]`` on every grid node for the ordered exponential ``E``.

    Symmetric: ``E = exp(i xi a + i conj(xi) a^dagger) = D(i conj(xi))``; the
    normal and antinormal exponentials differ by ``exp(+-|xi|^2 / 2)``.
    Classical ordering is treated as symmetric (Weyl) here.
    """
    if grid.dims != 1:
        raise ValueError("the Fock oracle is single-mode; build product states per mode")
    ordering = Ordering(ordering)
    op = np.asarray(op, dtype=complex)
    n_max = op.shape[0]
    xi, abs2 = xi_field(grid)
    beta = (1j * np.conj(xi[0])).ravel()
    out = np.empty(beta.size, dtype=complex)
    for start in range(0, beta.size, chunk):
        d = displacement_elements(beta[start:start + chunk], n_max)
        out[start:start + chunk] = np.einsum("nm,pmn->p", op, d)
    return out.reshape(grid.shape) * _ordering_gaussian(abs2, ordering)


def validity_radius(n_max: int) -> float:
    """Largest ``|xi|^2`` trusted for an ``n_max``-level truncation."""
    return n_max / 4.0


def validity_mask(field: CharField) -> np.ndarray:
    radius = field.flags.get("validity_radius")
    _, abs2 = xi_field(field.grid)
    if radius is None:
        return np.ones(field.grid.shape, dtype=bool)
    return abs2 <= radius


def density_to_charfn(rho: FockDensity, grid: PhaseGrid, ordering: Ordering | str) -> CharField:
    ordering = Ordering(ordering)
    if not ordering.is_quantum:
        raise ValueError("density_to_charfn produces quantum orderings only")
    data = operator_charfn(rho.rho, grid, ordering)
    field = CharField(grid, data, ordering)
    radius = validity_radius(rho.n_max)
    _, abs2 = xi_field(grid)
    field.flags["validity_radius"] = radius
    if float(abs2.max()) > radius:
        field.flags["validity_exceeded"] = True
        log.debug("grid |xi|^2 max %.3g exceeds oracle validity radius %.3g", abs2.max(), radius)
    return field


def charfn_to_density(field: CharField, n_max: int) -> FockDensity:
    """Invert a normal-order characteristic function to a density matrix.

    The Glauber P function is recovered on the dual grid by the grid transform,
    then integrated against coherent projectors ``|alpha><alpha|`` with
    ``alpha = (omega x + i p) / sqrt(2 hbar omega)``.
    """
    if field.ordering is not Ordering.NORMAL:
        raise ValueError("charfn_to_density expects a normal-order characteristic function")
    kind = field.flags.get("state_kind")
    if kind in SINGULAR_P_KINDS:
        raise ValueError(f"{kind} states have no regular P function to integrate")
    grid = field.grid
    if grid.dims != 1:
        raise ValueError("charfn_to_density is single-mode")
    if n_max > MAX_FOCK_DIM:
        raise ValueError(f"n_max above {MAX_FOCK_DIM} is not supported")
    p_func = fourier_to_phase(field)
    xs, ps = grid.dual_mesh()
    alpha = (grid.omega * xs[0] + 1j * ps[0]) / np.sqrt(2 * grid.hbar * grid.omega)
    amps = _coherent_amplitudes_grid(alpha.ravel(), n_max)
    weights = (FOCK_INVERSE_KAPPA * grid.dual_cell_volume) * p_func.ravel()
    rho = np.einsum("k,km,kn->mn", weights, amps, amps.conj())
    return FockDensity(rho)


def _coherent_amplitudes_grid(alpha: np.ndarray, n_max: int) -> np.ndarray:
    n = np.arange(n_max)
    out = np.empty((alpha.size, n_max), dtype=complex)
    out[:, 0] = np.exp(-np.abs(alpha) ** 2 / 2)
    for k in range(1, n_max):
        out[:, k] = out[:, k - 1] * alpha / math.sqrt(k)
    return out


def normal_charfn_series(rho: FockDensity, xi: np.ndarray) -> np.ndarray:
    """Normal-order characteristic function from the raw finite power series.

    ``<m| exp(i conj(xi) a^dagger) exp(i xi a) |n>`` is an exact finite sum in a
    truncated space because ``a`` only lowers. Used as an independent cross-check
    of :func:`operator_charfn` at moderate ``|xi|``.
    """
    r = rho.rho
    n_max = r.shape[0]
    fact = np.array([math.factorial(k) for k in range(n_max)], dtype=float)
    # coefficient of u^a v^b with u = i conj(xi), v = i xi
    coef = np.zeros((n_max, n_max), dtype=complex)
    for a_ in range(n_max):
        for b_ in range(n_max):
            for j in range(n_max - max(a_, b_)):
                coef[a_, b_] += (
                    r[b_ + j, a_ + j] * math.sqrt(fact[a_ + j] * fact[b_ + j])
                    / (fact[j] * fact[a_] * fact[b_])
                )
    xi = np.asarray(xi, dtype=complex)
    u = (1j * np.conj(xi))[..., None] ** np.arange(n_max)
    v = (1j * xi)[..., None] ** np.arange(n_max)
    return np.einsum("...a,ab,...b->...", u, coef, v)

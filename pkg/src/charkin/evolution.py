"""Right-hand sides of the characteristic-function EOM and explicit time stepping.

All three evaluators compute ``dC/dt`` in the ordering of ``C``:

* quadrature -- direct Riemann sum of ``K(l, l') H(l - l') C(l')`` over the
  grid nodes (truncated domain, not circular), with ``H`` taken from its
  difference-lattice samples;
* distributional -- a polynomial Hamiltonian collapses the integral to a
  linear PDE, evaluated with closed-form kernel derivatives on the diagonal
  and spectral derivatives of ``C``;
* star_product -- normal order only, from the characteristic functions of
  the products ``rho H`` and ``H rho``.

Sign: with ``C = Tr[rho exp(i(lambda x + mu p))]`` and the von Neumann equation
``d rho/dt = (i/hbar)(rho H - H rho)``, the convolution with the kernels above
enters with an overall minus sign (``EOM_SIGN``). This is what the Fock
oracle measures; see tests/test_evolution.py.
"""
from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import io
from .charfn import check_invariants
from .grid import CharField, KernelKind, Ordering, PhaseGrid, spectral_derivative
from .hamiltonian import MAX_DEGREE, Distributional, GridSampled
from .kernels import KernelCache, _flat_coords, diagonal_derivatives

log = logging.getLogger(__name__)

EOM_SIGN = -1.0

# (i/hbar) kappa (C_rhoH - C_Hrho) equals the normal-kernel quadrature with
# kappa = 1 under the grid Fourier convention; pinned by a calibration test.
STAR_PRODUCT_KAPPA = 1.0

_DEFAULT_CACHE = KernelCache()


class RhsMethod:
    QUADRATURE = "quadrature"
    DISTRIBUTIONAL = "distributional"
    STAR_PRODUCT = "star_product"
    ALL = (QUADRATURE, DISTRIBUTIONAL, STAR_PRODUCT)


class MonitorBreach(RuntimeError):
    def __init__(self, message: str, report: dict, snapshot: CharField, t: float):
        super().__init__(message)
        self.report = report
        self.snapshot = snapshot
        self.t = t


def _check_orderings(C: CharField, ham_ordering: Ordering, kind: KernelKind) -> None:
    kind = KernelKind(kind)
    if C.ordering is not kind or ham_ordering is not kind:
        raise ValueError(
            "ordering mismatch: field "
            f"{C.ordering.value}, Hamiltonian {ham_ordering.value}, kernel {kind.value}"
        )


# -- quadrature ---------------------------------------------------------------

def _difference_indices(grid: PhaseGrid):
    """Per-node integer offsets used to index H(l - l') on the padded lattice."""
    idx = np.indices(grid.shape).reshape(len(grid.shape), -1).T
    return idx


def _convolve(
    C: CharField,
    hp: np.ndarray,
    weight: Callable[[slice], np.ndarray],
    threads: int = 1,
    chunk: int = 256,
) -> np.ndarray:
    """``sum_{l'} weight[l, l'] H(l - l') C(l') dV`` for every output node ``l``.

    ``hp`` holds H on the difference lattice (node ``k`` at offset ``k - G``).
    Source nodes at ``-L`` have no mirror on an even grid and get zero weight,
    so the sum is symmetric under ``lambda' -> -lambda'``.
    """
    grid = C.grid
    idx = _difference_indices(grid)
    shape = np.array(grid.shape)
    c_flat = np.where(np.all(idx > 0, axis=1), C.data.ravel(), 0.0)
    n = grid.size
    out = np.empty(n, dtype=complex)

    def work(start: int) -> None:
        rows = slice(start, min(start + chunk, n))
        diff = idx[rows, None, :] - idx[None, :, :] + shape
        hvals = hp[tuple(diff[..., a] for a in range(diff.shape[-1]))]
        w = weight(rows)
        out[rows] = np.einsum("ij,ij,j->i", w, hvals, c_flat)

    starts = range(0, n, chunk)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, starts))
    else:
        for s in starts:
            work(s)
    return (out * grid.cell_volume).reshape(grid.shape)


def rhs_quadrature(
    C: CharField,
    ham: GridSampled,
    kind: KernelKind | str,
    cache: KernelCache | None = None,
    threads: int = 1,
) -> CharField:
    """Kernel-convolution RHS by direct quadrature, O(G^4) per dimension pair."""
    kind = KernelKind(kind)
    if not isinstance(ham, GridSampled):
        raise TypeError("quadrature needs a grid-sampled Hamiltonian")
    if not C.grid.compatible(ham.grid):
        raise ValueError("grid mismatch between state and Hamiltonian")
    _check_orderings(C, ham.ordering, kind)
    cache = _DEFAULT_CACHE if cache is None else cache
    grid = C.grid
    out = _convolve(C, ham.lattice(), lambda rows: cache.slab(kind, grid, rows), threads)
    return C.copy(EOM_SIGN * out)


# -- star product -------------------------------------------------------------

def product_charfns(C: CharField, ham: GridSampled, threads: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Normal-order characteristic functions of ``rho H`` and ``H rho``."""
    if C.ordering is not Ordering.NORMAL or ham.ordering is not Ordering.NORMAL:
        raise ValueError("the product forms are defined for normal order only")
    if not C.grid.compatible(ham.grid):
        raise ValueError("grid mismatch between state and Hamiltonian")
    grid = C.grid
    if grid.dims != 1:
        raise ValueError("star-product path is single-mode")
    lam, mu = _flat_coords(grid)
    lam, mu = lam[:, 0], mu[:, 0]
    scale = grid.hbar / (2 * grid.omega)
    w = grid.omega

    def weight(sign: float):
        def f(rows):
            lp, mp = lam[None, :], mu[None, :]
            dl, dm = lam[rows, None] - lp, mu[rows, None] - mp
            return np.exp(scale * (lp + sign * 1j * w * mp) * (dl - sign * 1j * w * dm))
        return f

    rho_h = _convolve(C, ham.lattice(), weight(+1.0), threads)
    h_rho = _convolve(C, ham.lattice(), weight(-1.0), threads)
    return rho_h, h_rho


def rhs_star_product(C: CharField, ham: GridSampled, threads: int = 1,
                     kappa: float = STAR_PRODUCT_KAPPA) -> CharField:
    """``(i / hbar) kappa (C_rhoH - C_Hrho)`` from the von Neumann equation."""
    rho_h, h_rho = product_charfns(C, ham, threads)
    return C.copy((1j / C.grid.hbar) * kappa * (rho_h - h_rho))


# -- distributional -----------------------------------------------------------

def rhs_distributional(C: CharField, ham: Distributional, kind: KernelKind | str) -> CharField:
    """Collapsed PDE form for a delta-derivative Hamiltonian.

    ``dC/dt = sign * sum_jk d_jk d^j_l' d^k_m' [K(l, m, l', m') C(l', m')]`` on
    the diagonal; expanded with Leibniz into kernel derivatives (closed form)
    times spectral derivatives of ``C``.
    """
    kind = KernelKind(kind)
    if not isinstance(ham, Distributional):
        raise TypeError("distributional method needs a Distributional Hamiltonian")
    _check_orderings(C, ham.ordering, kind)
    if ham.degree > MAX_DEGREE:
        raise ValueError(f"degree overflow: {ham.degree} > {MAX_DEGREE}")
    grid = C.grid
    kd = diagonal_derivatives(kind, grid, ham.degree)
    derivs: dict[tuple[int, int], np.ndarray] = {}
    out = np.zeros(grid.shape, dtype=complex)
    for (j, k), d in ham.terms.items():
        for a in range(j + 1):
            for b in range(k + 1):
                if a == j and b == k:
                    continue  # kernel vanishes on the diagonal
                kval = kd[(j - a, k - b)]
                if not np.any(kval):
                    continue
                if (a, b) not in derivs:
                    derivs[(a, b)] = spectral_derivative(C, (a, b))
                out += (d * math.comb(j, a) * math.comb(k, b)) * kval * derivs[(a, b)]
    return C.copy(EOM_SIGN * out)


# -- dispatch and integration -------------------------------------------------

def rhs(C: CharField, ham, kind: KernelKind | str, method: str, **kw) -> CharField:
    if method == RhsMethod.DISTRIBUTIONAL:
        return rhs_distributional(C, ham, kind)
    if method == RhsMethod.QUADRATURE:
        return rhs_quadrature(C, ham, kind, **kw)
    if method == RhsMethod.STAR_PRODUCT:
        if KernelKind(kind) is not Ordering.NORMAL:
            raise ValueError("star_product method supports normal order only")
        return rhs_star_product(C, ham, **kw)
    raise ValueError(f"unknown RHS method {method!r}")


def step_rk4(C: CharField, ham, kind, method: str, dt: float, **kw) -> CharField:
    """One classical fourth-order Runge-Kutta step."""
    if dt == 0:
        return C.copy()

    def f(field: CharField) -> np.ndarray:
        return rhs(field, ham, kind, method, **kw).data

    k1 = f(C)
    k2 = f(C.copy(C.data + 0.5 * dt * k1))
    k3 = f(C.copy(C.data + 0.5 * dt * k2))
    k4 = f(C.copy(C.data + dt * k3))
    return C.copy(C.data + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4))


@dataclass
class EvolveConfig:
    dt: float
    t_final: float
    method: str = RhsMethod.DISTRIBUTIONAL
    kind: KernelKind = Ordering.SYMMETRIC
    cadence: int = 1
    snapshot_cadence: int | None = None
    norm_tol: float = 1e-6
    herm_tol: float = 1e-6
    bound_tol: float = 1e-6
    dump_dir: str | None = None
    threads: int = 1

    def __post_init__(self):
        self.kind = KernelKind(self.kind)
        if self.method not in RhsMethod.ALL:
            raise ValueError(f"unknown RHS method {self.method!r}")
        if self.dt < 0:
            raise ValueError("dt must be non-negative")
        if self.t_final < 0:
            raise ValueError("t_final must be non-negative")
        if self.dt == 0 and self.t_final > 0:
            raise ValueError("dt must be positive when t_final > 0")
        if self.cadence < 1:
            raise ValueError("monitor cadence must be at least 1")

    @property
    def n_steps(self) -> int:
        if self.t_final == 0:
            return 0
        return max(1, int(round(self.t_final / self.dt)))


@dataclass
class Snapshot:
    t: float
    field: CharField
    report: dict


@dataclass
class Trajectory:
    snapshots: list[Snapshot] = field(default_factory=list)
    monitors: list[dict] = field(default_factory=list)

    def append(self, t: float, C: CharField, report: dict) -> None:
        if self.snapshots and t <= self.snapshots[-1].t:
            raise ValueError("trajectory times must increase strictly")
        self.snapshots.append(Snapshot(t, C, report))

    @property
    def times(self) -> list[float]:
        return [s.t for s in self.snapshots]

    @property
    def final(self) -> CharField:
        return self.snapshots[-1].field

    def max_monitor(self, key: str) -> float:
        return max((m[key] for m in self.monitors), default=0.0)


def monitor_report(C: CharField, reference: complex) -> dict:
    inv = check_invariants(C) if C.ordering.is_quantum else check_invariants(C, bounds=False)
    return {
        "norm_defect": inv["normalization"],
        "norm_drift": abs(C.origin_value - reference),
        "herm_defect": inv["hermiticity"],
        "bound_defect": inv["bound_violation"],
    }


RK4_IMAG_LIMIT = 2.0 * math.sqrt(2.0)


def estimate_rate(C: CharField, ham, kind, method: str, iterations: int = 20,
                  seed: int = 0, **kw) -> float:
    """Spectral-radius estimate of the (linear) RHS operator by power iteration.

    RK4 stays stable for ``dt * rate`` below about ``2 sqrt(2)`` when the
    spectrum is close to the imaginary axis, as it is for unitary dynamics.
    """
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(C.grid.shape) + 1j * rng.standard_normal(C.grid.shape)
    v /= np.linalg.norm(v)
    log_growth = 0.0
    for _ in range(iterations):
        w = rhs(C.copy(v), ham, kind, method, **kw).data
        norm = float(np.linalg.norm(w))
        if norm == 0:
            return 0.0
        log_growth += math.log(norm)
        v = w / norm
    return math.exp(log_growth / iterations)


def evolve(C0: CharField, ham, config: EvolveConfig) -> Trajectory:
    """Integrate with RK4, monitoring conservation every ``config.cadence`` steps."""
    kw = {"threads": config.threads} if config.method != RhsMethod.DISTRIBUTIONAL else {}
    kind = config.kind
    traj = Trajectory()
    reference = C0.origin_value
    report0 = monitor_report(C0, reference)
    herm0 = report0["herm_defect"]
    traj.append(0.0, C0, report0)
    traj.monitors.append({"t": 0.0, **report0})
    n = config.n_steps
    if n == 0:
        return traj
    rate = estimate_rate(C0, ham, kind, config.method, **kw)
    if rate * config.dt > RK4_IMAG_LIMIT:
        log.warning("dt=%.3g exceeds the RK4 stability estimate %.3g (spectral radius %.3g)",
                    config.dt, RK4_IMAG_LIMIT / rate, rate)
    snap_every = config.snapshot_cadence or config.cadence
    C = C0
    for step in range(1, n + 1):
        C = step_rk4(C, ham, kind, config.method, config.dt, **kw)
        t = step * config.dt
        if step % config.cadence == 0 or step == n:
            report = monitor_report(C, reference)
            traj.monitors.append({"t": t, **report})
            breach = _breach(report, herm0, config)
            if breach:
                if config.dump_dir:
                    path = Path(config.dump_dir) / f"breach_{step:06d}.chkn"
                    path.parent.mkdir(parents=True, exist_ok=True)
                    io.write_dump(path, C)
                raise MonitorBreach(f"monitor breach at t={t:.6g}: {breach}", report, C, t)
        if step % snap_every == 0 or step == n:
            traj.append(t, C, traj.monitors[-1] if traj.monitors[-1]["t"] == t else {})
    return traj


def _breach(report: dict, herm0: float, config: EvolveConfig) -> str:
    problems = []
    if report["norm_drift"] > config.norm_tol:
        problems.append(f"normalization drift {report['norm_drift']:.3e}")
    if report["herm_defect"] - herm0 > config.herm_tol:
        problems.append(f"hermiticity defect {report['herm_defect']:.3e}")
    if report["bound_defect"] > config.bound_tol:
        problems.append(f"bound violation {report['bound_defect']:.3e}")
    return "; ".join(problems)


def write_monitor_csv(path: str | Path, monitors: list[dict]) -> None:
    keys = ["t", "norm_defect", "norm_drift", "herm_defect", "bound_defect"]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=keys, extrasaction="ignore")
        writer.writeheader()
        for row in monitors:
            writer.writerow(row)

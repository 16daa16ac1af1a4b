"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline; they
are also repeated in the terminal summary.
"""
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from charkin import fock
from charkin.charfn import StateSpec, as_classical, check_invariants, make_state_charfn
from charkin.classical import ClassicalHamiltonian, classical_rhs, liouville_pde_rhs
from charkin.cli import main
from charkin.evolution import (
    EvolveConfig,
    evolve,
    rhs_distributional,
    rhs_quadrature,
    rhs_star_product,
)
from charkin.grid import CharField, Ordering, make_grid, xi_field
from charkin.hamiltonian import (
    PolyHamiltonian,
    XPPoly,
    gaussian_symbol_charfn,
    ham_charfn_grid,
    ham_distributional,
)
from charkin.kernels import eval_kernel
from charkin.wigner import MoyalOrder, moyal_rhs, to_wigner

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
RESULTS: list[str] = []


def report(number: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def rel(a, b) -> float:
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / np.linalg.norm(b))


def test_criterion_01_kernel_identity():
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    lam, mu, lp, mp = rng.uniform(-5, 5, (4, 100_000))
    hbar = rng.uniform(0.05, 3.0, 100_000)
    ks = eval_kernel("symmetric", lam, mu, lp, mp, hbar)
    kc = eval_kernel("classical", lam, mu, lp, mp)
    err = float(np.max(np.abs(ks - (2 / hbar) * np.sin(hbar * kc / 2))))
    elapsed = time.perf_counter() - start
    report(1, err <= 1e-12 and elapsed < 1.0,
           f"max |K_s - (2/hbar) sin(hbar K_c/2)| = {err:.2e} on 1e5 tuples (<= 1e-12), {elapsed:.2f} s")


def test_criterion_02_classical_limit(tmp_path, capsys):
    rng = np.random.default_rng(2)
    start = time.perf_counter()
    lam, mu, lp, mp = rng.uniform(-3, 3, (4, 100_000))
    worst = 0.0
    for hbar in (1.0, 0.3, 0.1):
        ks = eval_kernel("symmetric", lam, mu, lp, mp, hbar)
        kc = eval_kernel("classical", lam, mu, lp, mp)
        # absolute floor of a few ulps of |K_c| absorbs rounding where K_c -> 0
        bound = (hbar**2 / 24) * np.abs(kc) ** 3 * (1 + 1e-6) + 4 * np.finfo(float).eps * np.abs(kc)
        worst = max(worst, float(np.max(np.abs(ks - kc) - bound)))
    code = main(["hbar-scan", "--config", str(CONFIGS / "hbar_scan.json"), "--out", str(tmp_path)])
    result = json.loads(capsys.readouterr().out)
    ratios = [r for r in result["ratios"] if r is not None]
    elapsed = time.perf_counter() - start
    ok = code == 0 and worst <= 0 and ratios and all(abs(r - 4) <= 0.4 for r in ratios) \
        and elapsed < 10
    report(2, ok, f"bound excess {worst:.2e} (<= 0); hbar-halving ratios "
                  f"{', '.join(f'{r:.4f}' for r in ratios)} (4 +- 10%); {elapsed:.2f} s")


def test_criterion_03_ordering_relations_and_bounds():
    start = time.perf_counter()
    g = make_grid(1, 8.0, 8.0, 64)
    xi, abs2 = xi_field(g)
    mask = abs2 <= fock.validity_radius(32)
    ratio_defect = bound_violation = 0.0
    for spec in (StateSpec("coherent", alpha=1.0), StateSpec("fock", n=1), StateSpec("thermal", nbar=0.5)):
        fields = {o: make_state_charfn(spec, g, o, n_max=32) for o in ("normal", "symmetric", "antinormal")}
        # normal order from the independent finite power series
        series = fock.normal_charfn_series(spec.density(32), xi[0][mask])
        gauss = np.exp(abs2 / 2)[mask]
        ratio_defect = max(
            ratio_defect,
            float(np.max(np.abs(series - gauss * fields["symmetric"].data[mask]))),
            float(np.max(np.abs(fields["normal"].data[mask] - gauss * fields["symmetric"].data[mask]))),
            float(np.max(np.abs(fields["symmetric"].data[mask] - gauss * fields["antinormal"].data[mask]))),
        )
        for f in fields.values():
            bound_violation = max(bound_violation, check_invariants(f, mask)["bound_violation"])
    elapsed = time.perf_counter() - start
    report(3, ratio_defect <= 1e-10 and bound_violation <= 1e-8 and elapsed < 30,
           f"ratio defect {ratio_defect:.2e} (<= 1e-10), bound violation {bound_violation:.2e} "
           f"(<= 1e-8) inside |xi|^2 <= 8, 64^2 grid; {elapsed:.2f} s")


def test_criterion_04_oracle_cross_check():
    start = time.perf_counter()
    g = make_grid(1, 8.0, 8.0, 32)
    rho = fock.coherent_density(1.0, 20)
    C = fock.density_to_charfn(rho, g, "symmetric")
    cases = {
        "harmonic": (PolyHamiltonian.harmonic(), 1e-4),
        "kerr": (PolyHamiltonian.kerr(1.0), 1e-2),
        "x4": (PolyHamiltonian.anharmonic(0.1), 1e-2),
    }
    errs, ok = {}, True
    for name, (h, tol) in cases.items():
        target = fock.charfn_rate(rho, h.matrix(20), g, "symmetric", dt=1e-4)
        got = rhs_distributional(C, ham_distributional(h, "symmetric"), "symmetric").data
        errs[name] = rel(got, target)
        ok &= errs[name] <= tol
    elapsed = time.perf_counter() - start
    report(4, ok and elapsed < 300,
           "relative L2 vs oracle: " + ", ".join(f"{k} {v:.2e}" for k, v in errs.items())
           + f" (<= 1e-4, 1e-2, 1e-2); {elapsed:.2f} s")


def test_criterion_05_quadrature_vs_distributional():
    start = time.perf_counter()
    h = PolyHamiltonian.kerr(1.0)
    errs = []
    for G in (32, 48):
        g = make_grid(1, 8.0, 8.0, G)
        C = make_state_charfn(StateSpec("coherent", alpha=1.0), g, "symmetric", n_max=20)
        q = rhs_quadrature(C, ham_charfn_grid(h, g, "symmetric", n_max=20, check_divergence=False),
                           "symmetric").data
        d = rhs_distributional(C, ham_distributional(h, "symmetric"), "symmetric").data
        errs.append(rel(q, d))
    order = math.log(errs[0] / errs[1]) / math.log(48 / 32)
    elapsed = time.perf_counter() - start
    report(5, errs[0] <= 1e-2 and order >= 2 and elapsed < 900,
           f"Kerr relative L2 {errs[0]:.2e} at 32^2 (<= 1e-2), {errs[1]:.2e} at 48^2, "
           f"observed order {order:.1f} (>= 2); {elapsed:.2f} s")


def test_criterion_06_star_product():
    start = time.perf_counter()
    rng = np.random.default_rng(6)
    g = make_grid(1, 4.0, 4.0, 32)
    hams = [gaussian_symbol_charfn(g, "normal", width=0.8),
            ham_charfn_grid(PolyHamiltonian.harmonic(), g, "normal", n_max=20, check_divergence=False)]
    # one-time calibration: least-squares kappa from the first field
    C = CharField(g, rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape), Ordering.NORMAL)
    s = rhs_star_product(C, hams[0], kappa=1.0).data
    q = rhs_quadrature(C, hams[0], "normal").data
    kappa = complex(np.vdot(s, q) / np.vdot(s, s))
    worst = 0.0
    for ham in hams:
        for _ in range(3):
            C = CharField(g, rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape), Ordering.NORMAL)
            star = rhs_star_product(C, ham, kappa=kappa.real).data
            worst = max(worst, rel(star, rhs_quadrature(C, ham, "normal").data))
    elapsed = time.perf_counter() - start
    report(6, worst <= 1e-10 and abs(kappa - 1) < 1e-10 and elapsed < 300,
           f"calibrated kappa = {kappa.real:.12f}; max relative L2 star vs normal kernel {worst:.2e} "
           f"(<= 1e-10) on 6 random fields, 32^2; {elapsed:.2f} s")


def test_criterion_07_harmonic_period():
    start = time.perf_counter()
    g = make_grid(1, 10.0, 10.0, 48)
    C0 = make_state_charfn(StateSpec("coherent", alpha=1.0), g, "symmetric", n_max=40)
    T = 2 * math.pi
    cfg = EvolveConfig(dt=T / 2000, t_final=T, method="distributional", kind="symmetric",
                       cadence=50, norm_tol=1e-8, herm_tol=1e-8)
    traj = evolve(C0, ham_distributional(PolyHamiltonian.harmonic(), "symmetric"), cfg)
    err = rel(traj.final.data, C0.data)
    herm0 = traj.monitors[0]["herm_defect"]
    norm_drift = traj.max_monitor("norm_drift")
    herm_drift = max(m["herm_defect"] - herm0 for m in traj.monitors)
    elapsed = time.perf_counter() - start
    report(7, err <= 1e-3 and norm_drift <= 1e-8 and herm_drift <= 1e-8 and elapsed < 120,
           f"final-vs-initial {err:.2e} (<= 1e-3), norm drift {norm_drift:.1e}, hermiticity drift "
           f"{herm_drift:.1e} (<= 1e-8), 48^2 L=10; {elapsed:.2f} s")


def test_criterion_08_quadratic_quantum_equals_classical():
    start = time.perf_counter()
    rng = np.random.default_rng(8)
    g = make_grid(1, 6.0, 6.0, 32)
    h = PolyHamiltonian.harmonic()
    quantum_rep = ham_distributional(h, "symmetric")
    classical_h = ClassicalHamiltonian.from_quantum(h)
    worst = 0.0
    for _ in range(5):
        C = CharField(g, rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape), Ordering.SYMMETRIC)
        q = rhs_distributional(C, quantum_rep, "symmetric").data
        c = classical_rhs(as_classical(C), classical_h).data
        worst = max(worst, float(np.max(np.abs(q - c)) / np.max(np.abs(q))))
    elapsed = time.perf_counter() - start
    report(8, worst <= 1e-12 and elapsed < 1.0,
           f"max relative difference symmetric vs classical RHS {worst:.2e} (<= 1e-12) on random fields; "
           f"{elapsed:.2f} s")


def test_criterion_09_wigner_consistency():
    start = time.perf_counter()
    g = make_grid(1, 12.0, 12.0, 64)
    C = make_state_charfn(StateSpec("coherent", alpha=1.0), g, "symmetric", n_max=40)
    W = to_wigner(C)
    symbols = {
        "harmonic": XPPoly({(0, 2): 0.5, (2, 0): 0.5}),
        "x4": XPPoly({(0, 2): 0.5, (4, 0): 1.0}),
    }
    consistency, liouville, mass = {}, 0.0, 0.0
    for name, sym in symbols.items():
        h = PolyHamiltonian.from_xp(sym)
        lhs = to_wigner(rhs_distributional(C, ham_distributional(h, "symmetric"), "symmetric")).data
        order = MoyalOrder.terminating(sym)
        consistency[name] = rel(lhs, moyal_rhs(W, sym, order).data)
        m0 = moyal_rhs(W, sym, 0)
        liouville = max(liouville, float(np.max(np.abs(m0.data - liouville_pde_rhs(W.data, sym, g)))))
        for M in range(order.M + 3):
            mass = max(mass, abs(moyal_rhs(W, sym, M).mass))
    elapsed = time.perf_counter() - start
    ok = all(v <= 1e-8 for v in consistency.values()) and liouville <= 1e-12 and mass <= 1e-10 \
        and elapsed < 60
    report(9, ok, "transform consistency " + ", ".join(f"{k} {v:.2e}" for k, v in consistency.items())
           + f" (<= 1e-8); M=0 vs Liouville {liouville:.1e} (<= 1e-12); max |mass| {mass:.1e} "
           f"(<= 1e-10); {elapsed:.2f} s")


def test_criterion_10_fock_round_trip():
    start = time.perf_counter()
    g = make_grid(1, 6.0, 6.0, 32)
    rho = fock.coherent_density(0.5, 10)
    back = fock.charfn_to_density(fock.density_to_charfn(rho, g, "normal"), 10)
    fid = fock.fidelity(rho, back)
    elapsed = time.perf_counter() - start
    report(10, fid >= 0.999 and elapsed < 300,
           f"fidelity {fid:.9f} (>= 0.999), 32^2 quadrature, N_max=10; {elapsed:.2f} s")

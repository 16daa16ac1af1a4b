import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import linalg

from charkin import fock
from charkin.charfn import StateSpec, make_state_charfn
from charkin.grid import CharField, Ordering, make_grid, xi_field
from charkin.hamiltonian import PolyHamiltonian
from conftest import rel_l2


def test_ladder_commutators():
    ops = fock.build_ops(12, hbar=0.7, omega=1.3)
    comm = ops.a @ ops.adag - ops.adag @ ops.a
    assert np.allclose(np.diag(comm)[:-1], 1.0, atol=1e-14)
    assert fock.coherent_density(0, 12).rho[0, 0] == pytest.approx(1.0)
    num = ops.adag @ ops.a
    assert num[0, 0] == 0
    xp = ops.x @ ops.p - ops.p @ ops.x
    assert np.allclose(xp[:-1, :-1], 0.7j * np.eye(11), atol=1e-12)


def test_fock_dimension_cap():
    g = make_grid(1, 4.0, 4.0, 8)
    with pytest.raises(ValueError):
        fock.charfn_to_density(CharField(g, np.ones(g.shape), Ordering.NORMAL), fock.MAX_FOCK_DIM + 1)


def test_harmonic_period_returns_density():
    rho = fock.coherent_density(1.0 + 0.5j, 30)
    h = PolyHamiltonian.harmonic(1.0, 2.0).matrix(30)
    out = fock.von_neumann_evolve(rho, h, math.pi)
    assert np.max(np.abs(out.rho - rho.rho)) < 1e-10
    assert fock.von_neumann_evolve(rho, h, 0.0).rho == pytest.approx(rho.rho)


@given(st.floats(-3, 3), st.floats(0.1, 2.0))
def test_purity_and_trace_conserved(t, chi):
    rho = fock.cat_density(1.2, 0.0, 24)
    h = PolyHamiltonian.kerr(chi).matrix(24) + PolyHamiltonian.position().matrix(24)
    out = fock.von_neumann_evolve(rho, h, t)
    assert out.purity() == pytest.approx(rho.purity(), abs=1e-10)
    d = out.defects()
    assert d["trace"] < 1e-12 and d["hermiticity"] < 1e-12


def test_non_hermitian_hamiltonian_rejected():
    rho = fock.coherent_density(0.3, 6)
    with pytest.raises(ValueError):
        fock.von_neumann_evolve(rho, PolyHamiltonian.annihilation().matrix(6), 1.0)


def test_state_constructors_are_valid():
    for rho in [fock.coherent_density(1.0, 20), fock.fock_density(3, 10),
                fock.thermal_density(0.5, 30), fock.cat_density(1.0, math.pi, 20)]:
        rho.check(trace_tol=1e-6)
    with pytest.raises(ValueError):
        fock.fock_density(10, 10)
    rho = fock.thermal_density(0.5, 30)
    pops = np.real(np.diag(rho.rho))[:5]
    assert np.allclose(pops, 0.5**np.arange(5) / 1.5 ** (np.arange(5) + 1), atol=1e-12)


def test_displacement_elements_match_expm():
    n_big, n = 80, 10
    ops = fock.build_ops(n_big)
    for beta in [0.3 + 0.2j, -0.8j, 1.1]:
        exact = linalg.expm(beta * ops.adag - np.conj(beta) * ops.a)[:n, :n]
        assert np.max(np.abs(fock.displacement_elements(np.array(beta), n) - exact)) < 1e-12


def test_vacuum_symmetric_value():
    g = make_grid(1, 4.0, 4.0, 8)
    C = fock.density_to_charfn(fock.coherent_density(0, 10), g, Ordering.SYMMETRIC)
    assert C.data[5, 4] == pytest.approx(math.exp(-0.25), abs=1e-12)  # lambda = 1, |xi|^2 = 1/2
    assert C.data[5, 4] == pytest.approx(0.778800783, abs=1e-9)
    Cn = fock.density_to_charfn(fock.coherent_density(0, 10), g, Ordering.NORMAL)
    assert np.allclose(Cn.data, 1.0, atol=1e-12)


@pytest.mark.parametrize("spec", [StateSpec("coherent", alpha=0.7 - 0.4j), StateSpec("fock", n=2),
                                  StateSpec("thermal", nbar=0.5)])
def test_ordering_ratios(spec):
    g = make_grid(1, 4.0, 4.0, 16)
    fields = {o: make_state_charfn(spec, g, o, n_max=32) for o in
              (Ordering.NORMAL, Ordering.SYMMETRIC, Ordering.ANTINORMAL)}
    mask = fock.validity_mask(fields[Ordering.SYMMETRIC])
    _, abs2 = xi_field(g)
    lhs = fields[Ordering.NORMAL].data
    assert np.max(np.abs(lhs - np.exp(abs2 / 2) * fields[Ordering.SYMMETRIC].data)[mask]) < 1e-10
    assert np.max(np.abs(lhs - np.exp(abs2) * fields[Ordering.ANTINORMAL].data)[mask]) < 1e-10


def test_power_series_cross_check():
    rho = fock.thermal_density(0.3, 12)
    rho = fock.FockDensity(0.5 * rho.rho + 0.5 * fock.coherent_density(0.5j, 12).rho)
    g = make_grid(1, 3.0, 3.0, 8)
    xi, _ = xi_field(g)
    series = fock.normal_charfn_series(rho, xi[0])
    closed = fock.operator_charfn(rho.rho, g, Ordering.NORMAL)
    assert np.max(np.abs(series - closed)) < 1e-12


def test_truncation_converges_inside_validity_radius():
    g = make_grid(1, 6.0, 6.0, 16)
    spec = StateSpec("coherent", alpha=1.0)
    a = make_state_charfn(spec, g, Ordering.SYMMETRIC, n_max=20)
    b = make_state_charfn(spec, g, Ordering.SYMMETRIC, n_max=40)
    mask = fock.validity_mask(a)
    assert a.flags["validity_exceeded"]
    assert np.max(np.abs(a.data - b.data)[mask]) < 1e-8


def test_charfn_rate_difference_matches_commutator():
    g = make_grid(1, 8.0, 8.0, 16)
    rho = fock.coherent_density(1.0, 20)
    h = PolyHamiltonian.kerr().matrix(20)
    fd = fock.charfn_rate(rho, h, g, Ordering.SYMMETRIC)
    exact = fock.charfn_rate(rho, h, g, Ordering.SYMMETRIC, dt=None)
    assert rel_l2(fd, exact) < 1e-6


def test_round_trip_coherent():
    g = make_grid(1, 6.0, 6.0, 32)
    rho = fock.coherent_density(0.5, 10)
    C = fock.density_to_charfn(rho, g, Ordering.NORMAL)
    back = fock.charfn_to_density(C, 10)
    assert fock.fidelity(rho, back) >= 0.999


def test_vacuum_inverse():
    g = make_grid(1, 6.0, 6.0, 32)
    back = fock.charfn_to_density(CharField(g, np.ones(g.shape), Ordering.NORMAL), 6)
    target = np.zeros((6, 6))
    target[0, 0] = 1
    assert np.max(np.abs(back.rho - target)) < 1e-3


def test_thermal_inverse_populations():
    g = make_grid(1, 6.0, 6.0, 32)
    C = make_state_charfn(StateSpec("thermal", nbar=0.5), g, Ordering.NORMAL, n_max=40)
    back = fock.charfn_to_density(C, 8)
    n = np.arange(8)
    assert np.max(np.abs(back.rho - np.diag(0.5**n / 1.5 ** (n + 1)))) < 1e-3


def test_inverse_constant_is_unity():
    # regression pin of the calibrated constant
    assert fock.FOCK_INVERSE_KAPPA == 1.0


def test_inverse_rejects_singular_and_wrong_ordering():
    g = make_grid(1, 4.0, 4.0, 8)
    C = make_state_charfn(StateSpec("fock", n=1), g, Ordering.NORMAL, n_max=10)
    with pytest.raises(ValueError, match="regular P"):
        fock.charfn_to_density(C, 6)
    S = make_state_charfn(StateSpec("coherent", alpha=0.1), g, Ordering.SYMMETRIC, n_max=10)
    with pytest.raises(ValueError):
        fock.charfn_to_density(S, 6)

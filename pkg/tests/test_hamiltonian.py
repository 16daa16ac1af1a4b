import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from charkin import hamiltonian as ham
from charkin.charfn import hermiticity_defect
from charkin.evolution import rhs_distributional
from charkin.fock import build_ops
from charkin.grid import Ordering, make_grid
from charkin.hamiltonian import PolyHamiltonian, XPPoly, ham_charfn_grid, ham_distributional
from helpers import smooth_field


def symbol_close(a: XPPoly, b: XPPoly, tol=1e-12):
    keys = set(a.terms) | set(b.terms)
    return all(abs(a.terms.get(k, 0) - b.terms.get(k, 0)) < tol for k in keys)


def test_ladder_algebra_matches_matrices():
    a, ad = PolyHamiltonian.annihilation(), PolyHamiltonian.creation()
    comm = a * ad - ad * a
    assert comm.terms == {(0, 0): 1.0}
    ops = build_ops(20, 0.8, 1.4)
    x = PolyHamiltonian.position(0.8, 1.4)
    p = PolyHamiltonian.momentum(0.8, 1.4)
    prod = (x * p * x + p**2).matrix(20)
    exact = ops.x @ ops.p @ ops.x + ops.p @ ops.p
    assert np.max(np.abs(prod[:16, :16] - exact[:16, :16])) < 1e-12


@pytest.mark.parametrize("hbar,omega", [(1.0, 1.0), (0.5, 2.0)])
def test_harmonic_symbols(hbar, omega):
    h = PolyHamiltonian.harmonic(hbar, omega)
    quad = XPPoly({(0, 2): 0.5, (2, 0): 0.5 * omega**2})
    assert symbol_close(h.weyl_symbol(hbar, omega), quad)
    assert symbol_close(h.symbol("normal", hbar, omega), quad + XPPoly({(0, 0): hbar * omega / 2}))
    assert symbol_close(h.symbol("antinormal", hbar, omega), quad + XPPoly({(0, 0): -hbar * omega / 2}))


def test_weyl_quantisation_round_trip():
    sym = XPPoly({(0, 2): 0.5, (4, 0): 1.0, (1, 1): 0.3, (2, 1): -0.2})
    op = PolyHamiltonian.from_xp(sym, 0.7, 1.2)
    assert op.is_hermitian()
    assert symbol_close(op.weyl_symbol(0.7, 1.2), sym, 1e-12)
    harm = PolyHamiltonian.from_xp(XPPoly({(0, 2): 0.5, (2, 0): 0.5}))
    assert symbol_close(harm.weyl_symbol(), PolyHamiltonian.harmonic().weyl_symbol())
    assert harm.terms.get((1, 1)) == pytest.approx(1.0)


def test_kerr_storage_and_symbol():
    k = PolyHamiltonian.kerr(0.5)
    n = build_ops(10)
    num = n.adag @ n.a
    assert np.allclose(k.matrix(10), 0.5 * num @ num)
    # Weyl symbol of (a^dagger a)^2 is |alpha|^4 - |alpha|^2
    sym = k.alpha_symbol("symmetric")
    assert sym[(2, 2)] == pytest.approx(0.5)
    assert sym[(1, 1)] == pytest.approx(-0.5)
    assert sym.get((0, 0), 0) == pytest.approx(0.0)


def test_matrix_regression_at_origin():
    g = make_grid(1, 4.0, 4.0, 8)
    rep = ham_charfn_grid(PolyHamiltonian.harmonic(), g, "symmetric", n_max=40, check_divergence=False)
    # (hbar / 2 pi) * sum_{n<40} (n + 1/2)
    assert rep.field.origin_value == pytest.approx(800 / (2 * math.pi), rel=1e-12)
    assert rep.field.origin_value == pytest.approx(127.32395447351627, rel=1e-12)
    assert ham.GRID_HAMILTONIAN_KAPPA == 1.0


def test_zero_hamiltonian():
    g = make_grid(1, 4.0, 4.0, 8)
    rep = ham_charfn_grid(PolyHamiltonian(), g, "normal", n_max=10)
    assert not np.any(rep.field.data) and not np.any(rep.lattice())
    assert ham_distributional(PolyHamiltonian(), "symmetric").terms == {}


@pytest.mark.parametrize("ordering", ["normal", "symmetric", "antinormal"])
def test_grid_representation_is_linear(ordering):
    g = make_grid(1, 3.0, 3.0, 8)
    h1, h2 = PolyHamiltonian.harmonic(), PolyHamiltonian.kerr(0.3)
    kw = dict(n_max=16, check_divergence=False)
    a = ham_charfn_grid(h1, g, ordering, **kw)
    b = ham_charfn_grid(h2, g, ordering, **kw)
    ab = ham_charfn_grid(h1 + h2, g, ordering, **kw)
    scale = np.max(np.abs(ab.lattice()))
    assert np.max(np.abs(ab.field.data - a.field.data - b.field.data)) < 1e-12 * scale
    assert np.max(np.abs(ab.lattice() - a.lattice() - b.lattice())) < 1e-12 * scale


def test_lattice_centre_matches_grid_samples():
    g = make_grid(1, 3.0, 3.0, 8)
    rep = ham_charfn_grid(PolyHamiltonian.kerr(), g, "symmetric", n_max=12, check_divergence=False)
    assert np.array_equal(rep.lattice()[4:12, 4:12], rep.field.data)
    bare = ham.GridSampled(rep.field)
    padded = bare.lattice()
    assert np.array_equal(padded[4:12, 4:12], rep.field.data) and padded[0, 0] == 0
    with pytest.raises(ValueError):
        ham.GridSampled(rep.field, difference=np.zeros((8, 8)))


def test_truncation_divergence_flag():
    g = make_grid(1, 8.0, 8.0, 16)
    rep = ham_charfn_grid(PolyHamiltonian.kerr(), g, "normal", n_max=10)
    assert rep.flags.get("truncation_divergence")
    # polynomial operators are never trace class, so only the zero operator is unflagged
    rep = ham_charfn_grid(PolyHamiltonian.harmonic(), g, "symmetric", n_max=40)
    assert rep.flags.get("truncation_divergence")
    assert not ham_charfn_grid(PolyHamiltonian(), g, "symmetric").flags.get("truncation_divergence")


def test_distributional_coefficients():
    d = ham_distributional(PolyHamiltonian.identity(2.5), "symmetric")
    assert d.terms == {(0, 0): 2.5}
    d = ham_distributional(PolyHamiltonian.harmonic(), "symmetric")
    assert d.terms[(0, 2)] == pytest.approx(-0.5) and d.terms[(2, 0)] == pytest.approx(-0.5)
    assert symbol_close(d.phase_symbol(), PolyHamiltonian.harmonic().weyl_symbol())
    dn = ham_distributional(PolyHamiltonian.harmonic(), "normal")
    assert dn.terms[(0, 0)] == pytest.approx(-0.5)  # antinormal symbol constant


def test_degree_overflow():
    x = PolyHamiltonian.position()
    assert (x**6).degree == 6
    ham_distributional(x**6, "symmetric")
    with pytest.raises(ValueError, match="degree"):
        ham_distributional(x**7, "symmetric")
    with pytest.raises(ValueError, match="degree"):
        ham.distributional_from_symbol(XPPoly({(7, 0): 1.0}), "classical")


def test_rows_round_trip_and_validation():
    h = PolyHamiltonian.kerr(0.7) + PolyHamiltonian.position()
    assert PolyHamiltonian(h.rows()).terms == h.terms
    with pytest.raises(ValueError):
        PolyHamiltonian([[1, 0]])
    with pytest.raises(ValueError):
        PolyHamiltonian([[0.5, 0, 1.0, 0.0]])
    assert not PolyHamiltonian.annihilation().is_hermitian()


def test_identity_hamiltonian_gives_zero_rhs(rng):
    g = make_grid(1, 6.0, 6.0, 16)
    C = smooth_field(g, rng)
    out = rhs_distributional(C, ham_distributional(PolyHamiltonian.identity(3.0), "symmetric"), "symmetric")
    assert not np.any(out.data)


@given(st.integers(0, 2**32 - 1), st.sampled_from(["harmonic", "kerr", "quartic"]))
def test_hermitian_hamiltonian_preserves_hermiticity(seed, which):
    g = make_grid(1, 8.0, 8.0, 16)
    C = smooth_field(g, np.random.default_rng(seed))
    h = {
        "harmonic": PolyHamiltonian.harmonic(),
        "kerr": PolyHamiltonian.kerr(),
        "quartic": PolyHamiltonian.anharmonic(0.1),
    }[which]
    out = rhs_distributional(C, ham_distributional(h, "symmetric"), "symmetric")
    scale = np.max(np.abs(out.data))
    assert hermiticity_defect(out) < 1e-10 * max(scale, 1.0)

"""Phase-space dynamics of quantum and classical characteristic functions."""

__version__ = "0.1.0"

from .charfn import StateSpec, check_invariants, convert_ordering, make_state_charfn
from .classical import ClassicalHamiltonian, classical_rhs, liouville_pde_rhs
from .evolution import EvolveConfig, evolve, rhs, rhs_distributional, rhs_quadrature, rhs_star_product
from .grid import CharField, Ordering, PhaseGrid, make_grid
from .hamiltonian import PolyHamiltonian, XPPoly, ham_charfn_grid, ham_distributional
from .kernels import eval_kernel, kernel
from .wigner import MoyalOrder, WignerField, kinetic_potential_rhs, moyal_rhs, to_wigner

__all__ = [
    "CharField",
    "ClassicalHamiltonian",
    "EvolveConfig",
    "MoyalOrder",
    "Ordering",
    "PhaseGrid",
    "PolyHamiltonian",
    "StateSpec",
    "WignerField",
    "XPPoly",
    "check_invariants",
    "classical_rhs",
    "convert_ordering",
    "eval_kernel",
    "evolve",
    "ham_charfn_grid",
    "ham_distributional",
    "kernel",
    "kinetic_potential_rhs",
    "liouville_pde_rhs",
    "make_grid",
    "make_state_charfn",
    "moyal_rhs",
    "rhs",
    "rhs_distributional",
    "rhs_quadrature",
    "rhs_star_product",
    "to_wigner",
]

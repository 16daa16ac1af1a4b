"""Shared builders for tests."""
import numpy as np

from charkin.grid import CharField, Ordering, fourier_from_phase


def smooth_field(grid, rng, ordering=Ordering.SYMMETRIC, width=1.0, n_bumps=3):
    """Random Hermitian field: transform of a real sum of Gaussian bumps on (x, p).

    Smooth in both spaces only if the grid resolves both decays, e.g. L=6, G=32.
    """
    (x,), (p,) = grid.dual_mesh()
    w = np.zeros(grid.shape)
    for _ in range(n_bumps):
        x0, p0 = rng.uniform(-1.5, 1.5, 2)
        amp = rng.uniform(0.2, 1.0)
        w += amp * np.exp(-((x - x0) ** 2 + (p - p0) ** 2) / (2 * width**2))
    w /= w.sum() * grid.dual_cell_volume
    return fourier_from_phase(w, grid, ordering)


def random_field(grid, rng, ordering=Ordering.SYMMETRIC):
    data = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    return CharField(grid, data, ordering)

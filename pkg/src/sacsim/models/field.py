"""A one-dimensional Schrodinger field discretized on a grid.

Each grid point carries one hidden particle (Re psi(x_i), Im psi(x_i)); the
finite-difference Hamiltonian is then just another quadratic Hamiltonian for
the dynamics module. The momentum-space particles are the same state read in
the discrete Fourier basis, which is the eigenbasis of the cyclic shift.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from ..dynamics import QuadraticHamiltonian
from ..statespace import BasisLabel, PureState, hw_eigenbasis


def grid_points(n: int, box: tuple[float, float]) -> np.ndarray:
    a, b = box
    if n < 8:
        raise ValueError("need at least 8 grid points")
    if not b > a:
        raise ValueError(f"degenerate box [{a}, {b}]")
    return np.linspace(a, b, n)


def field_grid(potential: Callable[[np.ndarray], np.ndarray], n: int, box: tuple[float, float], mass: float = 1.0) -> QuadraticHamiltonian:
    """-1/(2m) d^2/dx^2 + V(x) with a central second difference and hard walls."""
    x = grid_points(n, box)
    h = x[1] - x[0]
    kin = (np.diag(np.full(n, 2.0)) - np.diag(np.ones(n - 1), 1) - np.diag(np.ones(n - 1), -1)) / (2 * mass * h * h)
    v = np.asarray(potential(x), dtype=float)
    return QuadraticHamiltonian(kin + np.diag(v))


def harmonic(omega: float = 1.0) -> Callable[[np.ndarray], np.ndarray]:
    return lambda x: 0.5 * omega**2 * x**2


def free(x: np.ndarray) -> np.ndarray:
    return np.zeros_like(x)


def gaussian_packet(x: np.ndarray, center: float = 0.0, width: float = 1.0, k0: float = 0.0) -> PureState:
    """exp(-(x-c)^2 / (2 w^2) + i k0 x), normalized on the grid."""
    psi = np.exp(-((x - center) ** 2) / (2 * width**2) + 1j * k0 * x)
    return PureState.from_vector(psi)


def position_moments(state: PureState, x: np.ndarray) -> tuple[float, float]:
    p = np.abs(state.amps) ** 2
    mean = float(np.sum(p * x))
    return mean, float(np.sum(p * (x - mean) ** 2))


def momentum_basis(n: int) -> BasisLabel:
    return hw_eigenbasis(1, 0, n)

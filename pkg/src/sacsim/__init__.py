"""Quantum simulation with classical hidden particles.

A pure state in a d-dimensional space is carried by d classical particles,
(q_i, p_i) = (Re <b_i|psi>, Im <b_i|psi>), that move under a quadratic
Hamiltonian. Tomography reads them out basis by basis; open systems use the
Heisenberg-Weyl coefficients of the density matrix instead.
"""
__version__ = "0.1.0"

from .dynamics import QuadraticHamiltonian, SymplecticMap, evolve, unitary_to_symplectic
from .errors import (
    DimensionMismatch,
    InvalidParticleSet,
    InvariantViolation,
    NonPhysicalState,
    NotHermitian,
    NotUnitary,
    SacError,
)
from .statespace import (
    DensityMatrix,
    HiddenParticleSet,
    PureState,
    computational_basis,
    from_phase_space,
    hw_eigenbasis,
    to_phase_space,
)
from .tomography import sac_qpt, sac_qst, verify_simulator

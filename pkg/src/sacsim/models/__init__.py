"""Worked systems: coined walk, linear optics, locality/cost, discretized field."""
from .field import field_grid, gaussian_packet, grid_points, harmonic, momentum_basis
from .locality import (
    ClusterState,
    CostReport,
    LinearOptics,
    MultiParty,
    QuantumWalk,
    Qudit,
    cnot,
    hilbert_bandwidth,
    sac_cost,
)
from .optics import BeamSplitter, OpticalMesh, PhaseShifter, mesh_decompose
from .walk import WalkResult, WalkSpec, run_walk, walk_step_unitary

"""Kitaev-wire braiding, wire-to-site mapping and Rydberg gates on fermionic Gaussian states."""
__version__ = "0.1.0"

from ._backend import BACKEND
from .bdg import (fidelity, ground_covariance, many_body_spectrum, majorana_zero_modes,
                  parity, pfaffian, quasiparticle_spectrum)
from .braiding import BraidSpec, WireParams, double_braid, ideal_spec, run_braid
from .dynamics import ProtocolStep, RampPair, evolve
from .gates import verify_identity
from .lattice import ErrorModel, QuadraticHamiltonian, TrapPotential, build_kitaev_chain
from .mapping import MappingSpec, check_conditions, run_mapping

__all__ = [
    "BACKEND", "BraidSpec", "ErrorModel", "MappingSpec", "ProtocolStep", "QuadraticHamiltonian",
    "RampPair", "TrapPotential", "WireParams", "build_kitaev_chain", "check_conditions",
    "double_braid", "evolve", "fidelity", "ground_covariance", "ideal_spec",
    "majorana_zero_modes", "many_body_spectrum", "parity", "pfaffian",
    "quasiparticle_spectrum", "run_braid", "run_mapping", "verify_identity",
]

"""Independent checks of the fixed-point solver."""

from .inversion import euler_invert, laplace_invert_scale
from .montecarlo import (McEstimate, SimConfig, mc_hitting_probabilities,
                         mc_hitting_probability)
from .orbit import (OrbitModel, bv_embedding, downward_record_expectation,
                    mc_orbit_psi, mc_orbit_record, orbit_evolve, orbit_jump,
                    riccati_residual, sylvester_psi, uv_embedding)

__all__ = [
    "euler_invert",
    "laplace_invert_scale",
    "McEstimate",
    "SimConfig",
    "mc_hitting_probability",
    "mc_hitting_probabilities",
    "OrbitModel",
    "bv_embedding",
    "uv_embedding",
    "orbit_evolve",
    "orbit_jump",
    "sylvester_psi",
    "riccati_residual",
    "downward_record_expectation",
    "mc_orbit_psi",
    "mc_orbit_record",
]

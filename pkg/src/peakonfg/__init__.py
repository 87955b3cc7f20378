"""Peakon dynamics, wave-breaking diagnostics, and 2-peakon taxonomy for the
fg-family of Camassa-Holm-type equations m_t + f(u,u_x) m + (g(u,u_x) m)_x = 0.
"""

__version__ = "0.1.0"

from .dynamics import (LocalData, PeakonDerivative, PeakonState, field_eval,
                       local_data, rhs_gch, rhs_general, rhs_gmch,
                       single_peakon_test, speed_amplitude)
from .equations import (FgEquation, HamiltonianFamily, PRESET_NAMES,
                        hamiltonian_family_from_text, hamiltonian_to_fg,
                        preset)
from .solver import IntegrationConfig, Trajectory, integrate, locate_event
from .twopeakon import (RegimeReport, classify_ch, classify_gch_p2,
                        classify_gmch, gmch_p2_separation_solution)
from .wavebreak import BlowupCoefficients, blowup_AB, blowup_indicator, tilde_D

__all__ = [
    "__version__",
    "PeakonState", "PeakonDerivative", "LocalData", "field_eval", "local_data",
    "rhs_general", "rhs_gch", "rhs_gmch", "single_peakon_test", "speed_amplitude",
    "FgEquation", "HamiltonianFamily", "PRESET_NAMES", "preset",
    "hamiltonian_family_from_text", "hamiltonian_to_fg",
    "IntegrationConfig", "Trajectory", "integrate", "locate_event",
    "RegimeReport", "classify_ch", "classify_gch_p2", "classify_gmch",
    "gmch_p2_separation_solution",
    "BlowupCoefficients", "blowup_AB", "blowup_indicator", "tilde_D",
]

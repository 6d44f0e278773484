"""Periodic traveling waves of scalar viscous balance laws and their orbital instability."""
import os

# cap BLAS threads before numpy loads so reruns are bit-reproducible
if os.environ.get("VBL_THREADS"):
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, os.environ["VBL_THREADS"])

__version__ = "0.1.0"

from .errors import *  # noqa: E402,F401,F403
from .model import (ModelSpec, builtin, check_hypotheses, find_ustar, gamma,  # noqa: E402,F401
                    load_model, melnikov_speed)
from .profile import (PulseSolution, WaveProfile, compute_pulse,  # noqa: E402,F401
                      continue_hopf_family, continue_large_period_family, find_periodic_orbit)
from .spectrum import (BlochSpectrum, InstabilityCertificate, assemble_bloch,  # noqa: E402,F401
                       certify_instability, pulse_spectrum, sweep_theta)
from .evolution import (EvolutionTrace, SpectralState, evolve, instability_experiment,  # noqa: E402,F401
                        orbital_distance, step_etd)

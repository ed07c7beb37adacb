"""gjjsim: a graphene-Josephson-junction hybrid quantum device simulator.

Layers: ``junction`` (Andreev transport and the circuit-membrane coupling),
``fock`` (truncated bosonic algebra), ``models`` (Hamiltonians and the
effective-frame parameter map), ``dynamics`` (Lindblad evolution and steady
states), ``analysis`` (Wigner functions, coherence and quantum Fisher
information) and ``cli`` (config-driven experiment runner).
"""

__version__ = "0.1.0"

from . import analysis, dynamics, errors, fock, junction, models
from .analysis import (EffectiveModel, QfiFit, cat_fidelity, fit_qfi,
                       l1_coherence, occupation, qfi_dynamic, qfi_from_state,
                       qfi_steady_analytic, qfi_steady_numeric, wigner)
from .dynamics import (LindbladTerm, SecularGenerator, Trajectory,
                       eigenbasis_dissipators, evolve, local_dissipators,
                       squeezed_frame_dissipators, steady_state)
from .fock import (DensityMatrix, OperatorMatrix, coherent, displacement,
                   fock_state, ket2dm, ladder, ptrace, squeeze, tensor, thermal)
from .junction import (CircuitParams, JunctionParams, MembraneParams,
                       circuit_params, coupling_g2, transmission)
from .models import (DriveParams, EffectiveParams, build_h_driven,
                     build_h_eff, build_h_hybrid, build_h_kerr,
                     build_h_squeezed, effective_params, resonance_detuning)

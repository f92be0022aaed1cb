"""Quantum particle in a one-dimensional box with a moving wall.

Exact Kummer-mode solutions for separable wall laws, a sine-basis Galerkin
propagator for driven oscillating boxes, and the usual observables.
"""

from ._backend import BACKEND
from .exact import (DomainError, ExactState, evaluate_phi, evaluate_psi, from_fixed_domain,
                    ground_state, mode_phase, to_fixed_domain)
from .galerkin import (CouplingMatrices, GalerkinState, NormDriftError, SolverError,
                       StepSizeError, Trajectory, coupling_matrices, propagate,
                       reconstruct_psi, rhs)
from .observables import (ObservableSample, SDecomposition, Spectrum, TimeSeries, dipole,
                          hhg_spectrum, kinetic_energy, norm, quantum_force, s_decomposition,
                          time_series)
from .potentials import Potential
from .specfun import (EigenvalueError, KummerDomainError, KummerMode, KummerRangeError,
                      eigenmode_function, find_eigenvalues, kummer_m, kummer_m_deriv)
from .walls import (HorizonError, SeparabilityReport, WallLaw, check_separability, eval_wall,
                    tau_clock)

__version__ = "0.1.0"

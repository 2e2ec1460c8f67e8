"""Exact diagonalization and entanglement-induced interaction analysis
for trapped one-dimensional Bose-Fermi mixtures (harmonic units)."""

from .basis import (ContactTensor, OrbitalBasis, SingleParticleOperators,
                    contact_tensor, eval_orbitals, hermite_rule, kinetic_matrix,
                    single_particle_operators, trap_matrix)
from .fock import (InfeasibleSectorError, ShapeError, SpeciesSector, Statistics,
                   apply_bilinear, enumerate_sector, one_body_operator,
                   one_body_transition)
from .hamiltonian import (CapacityError, MixtureEigenstate, MixtureModel,
                          MixtureOperator, assemble, eigensolve,
                          energy_decomposition, load_eigenstates, save_eigenstates)
from .lanczos import ConvergenceError, lanczos_lowest
from .schmidt import (DegenerateStateError, EntanglementReport, SchmidtDecomposition,
                      decompose, entanglement_report, mu_identity_residuals,
                      transition_amplitudes)
from .induced import (InducedQuantities, SmallDenominatorError, SpeciesInduced,
                      compute_induced, gamma_grid, h_ind, v1, v_eff, v_no)
from .effective import (EffectiveModel, EffectiveSolution, SMFResult,
                        build_effective, effective_matrix, select_closest,
                        smf_fixed_point_change, smf_solve, solve_effective)
from .observables import (CorrelationSet, UndefinedObservableError,
                          correlation_set, g2_grid, rdm1, rdm2, rho1_grid,
                          rho2_grid, species_slice)

__version__ = "0.1.0"

"""Sample-fluctuation bounds for pure-state certification with local random measurements.

Modules
-------
qstate       pure states, density matrices, Hermitian operators
pauli        Pauli decompositions, operator size distributions
husimi       coherent states, Husimi function, protocol sampler, MC integrals
observables  fidelity, shadow overlap, randomized overlap, t diagnostic
bounds       size bound, general bound, observable-independent bound
shadows      classical-shadow estimators and empirical alpha-norms
cli          command-line entry point
"""

from .errors import (CapExceededError, CertboundError, DimensionMismatchError, DivergenceError,
                     ZeroOperatorError)
from .qstate import (HermitianOperator, StateVector, density_of, expectation, make_basis_state, make_ghz,
                     make_haar_state, maximally_mixed, random_density_matrix, random_hermitian)
from .pauli import (PauliDecomposition, PauliString, SizeDistribution, decompose, matrix_of, reconstruct,
                    size_distribution, size_moment)
from .husimi import (CoherentConfig, McEstimate, coherent_state, husimi_value, integral_p2_exact,
                     integral_p2_mc, k_factor_mc, sample_config, sample_configs)
from .observables import (RandomizedAverage, fidelity_observable, haar_fidelity_size_dist,
                          randomized_overlap, shadow_overlap_observable, t_estimate, t_function,
                          table1_experiment)
from .bounds import (BoundReport, ValidVariation, general_bound_rhs, ghz_variation,
                     observable_independent_rhs, optimal_variation, search_variation, size_bound)
from .shadows import (FluctuationEstimate, bound_confrontation, empirical_alpha_norm,
                      sample_mean_fluctuation, shadow_estimate, snapshot_inverse)

__version__ = "0.1.0"

"""
Operator size and the cost of estimating an observable
======================================================

Every observable on N qubits expands in Pauli strings. The fraction of its
weight carried by strings with s non-identity letters is its size
distribution, and the size generating function sum_s 3^s P(s) sets how large
single-shot fluctuations must be for any unbiased estimator built from local
random-direction measurements.
"""

import numpy as np

from certbound import decompose, size_bound, size_distribution
from certbound.observables import fidelity_observable, haar_fidelity_size_dist
from certbound.qstate import make_basis_state, make_ghz, make_haar_state

# A product state spreads its projector evenly over low sizes, while GHZ puts
# almost all of it at the maximal size N.
for name, psi in [("|0000>", make_basis_state([0] * 4)), ("GHZ_4", make_ghz(4)),
                  ("Haar_4", make_haar_state(4, np.random.default_rng(0)))]:
    dec = decompose(fidelity_observable(psi))
    probs = size_distribution(dec).probs
    print(f"{name:8s} P(s) = {np.round(probs, 4)}  size bound = {size_bound(dec).value:.4f}")

# Averaged over Haar states the distribution has a closed form, binomial in s
# with a 3^s weight.
print("Haar average, N=4:", np.round(haar_fidelity_size_dist(4).probs, 4))

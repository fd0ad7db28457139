"""
Shadow fluctuations against the size bound
==========================================

Classical shadows built from local random directions are unbiased. At the
maximally mixed state their single-shot variance equals the squared size bound
exactly, so the empirical alpha = 2 fluctuation sits right on the bound.

The size bound assumes K = 2^N, the value at I/2^N. For other lab states K is
larger and the guaranteed floor drops, so at the pure target the empirical
fluctuation may fall below the size bound without contradiction.
"""

import numpy as np

from certbound import bound_confrontation
from certbound.observables import fidelity_observable
from certbound.qstate import density_of, make_haar_state, maximally_mixed

for n in (2, 3, 4):
    psi = make_haar_state(n, np.random.default_rng(n))
    xi = fidelity_observable(psi)
    for label, rho in [("I/2^N", maximally_mixed(n)), ("target", density_of(psi))]:
        rec = bound_confrontation(xi, psi, rho, 2.0, 50_000, np.random.default_rng(10 + n))
        e = rec.empirical
        guaranteed = label == "I/2^N"
        print(f"N={n} rho={label:7s} empirical {e.value:.4f} +/- {e.std_error:.4f}"
              f"  size bound {rec.bound.value:.4f}  above={rec.satisfied}"
              f"{'  (guaranteed)' if guaranteed else ''}")

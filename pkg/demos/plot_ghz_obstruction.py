"""
Why GHZ cannot be certified cheaply
===================================

Flipping the relative phase of GHZ gives a valid variation whose Pauli support
lies entirely at size N. Its observable-independent ratio is
|sin(phi/2)| (3/2)^(N/2) / sqrt(2), which grows exponentially whatever
observable is used for certification.
"""

import math

import numpy as np

from certbound.bounds import ghz_variation, observable_independent_rhs, search_variation
from certbound.qstate import make_basis_state, make_ghz

ns = np.arange(2, 11)
vals = [observable_independent_rhs(make_ghz(n), ghz_variation(n, math.pi)).value for n in ns]
for n, v in zip(ns, vals):
    print(f"N={n:2d}  ratio = {v:9.4f}")
slope = np.polyfit(ns, np.log(vals), 1)[0]
print(f"fitted rate {slope:.6f}, 0.5 log(3/2) = {0.5 * math.log(1.5):.6f}")

# A product state admits no such variation; a random search stays at O(1).
for n in (2, 4):
    _, rep = search_variation(make_basis_state([0] * n), 20, np.random.default_rng(n))
    print(f"|0...0>, N={n}: best ratio found {rep.value:.3f}")

"""
Exponential cost of Haar fidelity estimation
============================================

For the Haar-averaged fidelity projector the squared size bound is the exact
rational (10^N - 1) / (4^N (2^N + 1)), so the bound itself grows like
(sqrt(5/4))^N.
"""

import math

from certbound.bounds import haar_fidelity_bound_sq

print(" N   bound^2 (exact)             bound     N-th root")
for n in range(1, 11):
    sq = haar_fidelity_bound_sq(n)
    b = math.sqrt(sq)
    print(f"{n:2d}   {str(sq):26s} {b:8.4f}   {b ** (1 / n):.5f}")
print(f"asymptotic rate sqrt(5/4) = {math.sqrt(5 / 4):.5f}")

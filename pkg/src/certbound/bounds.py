"""Lower bounds on the single-shot fluctuation of any unbiased estimator.

Three evaluators are provided:

* ``size_bound`` -- the size generating-function bound of a fixed observable,
  sqrt(norm_sq * sum_{s>0} 3^s probs[s]);
* ``general_bound_rhs`` -- the ratio |tr[xi O]| / sqrt(K * int P(O, n)^2) for a
  given traceless O and K factor;
* ``observable_independent_rhs`` -- the same ratio with xi replaced by the target
  projector and O restricted to valid variations (P_psi + O >= 0), at K = 2^N.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from . import _mc
from .errors import DimensionMismatchError, ZeroOperatorError
from .husimi import integral_p2_exact
from .pauli import PauliDecomposition, decompose, size_distribution, size_moment, size_table
from .qstate import HermitianOperator, StateVector, density_of, haar_vector, make_ghz

KINDS = ("size_bound", "general_bound", "observable_independent")


def digest(*arrays) -> str:
    h = hashlib.sha256()
    for a in arrays:
        h.update(np.ascontiguousarray(a).tobytes())
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class BoundReport:
    kind: str
    value: float
    inputs_digest: str
    details: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown bound kind {self.kind!r}")
        if not self.value >= 0:
            raise ValueError("bound value must be non-negative")
        for k, v in self.details.items():
            if isinstance(v, float) and not math.isfinite(v):
                raise ValueError(f"detail {k!r} is not finite")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "value": self.value, "inputs_digest": self.inputs_digest,
                "details": dict(self.details)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def size_bound(dec: PauliDecomposition) -> BoundReport:
    """sqrt(norm_sq * sum_{s>0} 3^s probs[s]).

    This is the maximum of the ratio over traceless O at K = 2^N; ``details``
    also records the size moment sum_s 3^s probs[s] and the identity weight
    probs[0].
    """
    dist = size_distribution(dec)
    moment = size_moment(dist, 3.0)
    s = np.arange(1, dec.n_qubits + 1)
    gen = float(np.sum(3.0**s * dist.probs[1:]))
    return BoundReport(
        "size_bound",
        math.sqrt(dec.norm_sq * gen),
        digest(dec.coeffs, np.array([dec.norm_sq])),
        {"norm_sq": dec.norm_sq, "size_moment": moment, "identity_weight": float(dist.probs[0]),
         "nontrivial_moment": gen},
    )


def haar_fidelity_bound_sq(n_qubits: int) -> Fraction:
    """Squared size bound of the Haar-averaged fidelity projector, in exact arithmetic.

    Sums 3^s C(N, s) 3^s / (2^N (2^N + 1)) over s > 0 and multiplies by
    norm_sq = 1/2^N; compare with (10^N - 1) / (4^N (2^N + 1)).
    """
    d = 2**n_qubits
    probs = [Fraction(math.comb(n_qubits, s) * 3**s, d * (d + 1)) for s in range(1, n_qubits + 1)]
    gen = sum(Fraction(3**s) * p for s, p in zip(range(1, n_qubits + 1), probs))
    return Fraction(1, d) * gen


def pauli_overlap(a: PauliDecomposition, b: PauliDecomposition) -> float:
    """tr[A B] = 2^N sqrt(norm_sq_A norm_sq_B) sum_P c_A(P) c_B(P)."""
    if a.n_qubits != b.n_qubits:
        raise DimensionMismatchError("decompositions act on different qubit counts")
    return float(2**a.n_qubits * math.sqrt(a.norm_sq * b.norm_sq) * np.dot(a.coeffs, b.coeffs))


def general_bound_rhs(xi_dec: PauliDecomposition, o_dec: PauliDecomposition, k_value: float,
                      trace_tol: float = 1e-12) -> BoundReport:
    if k_value <= 0:
        raise ValueError("k_value must be positive")
    if abs(o_dec.coeffs[0]) * math.sqrt(o_dec.norm_sq) > trace_tol:
        raise ValueError("the variation O must be traceless")
    numerator = abs(pauli_overlap(xi_dec, o_dec))
    integral = integral_p2_exact(o_dec)
    denominator = math.sqrt(k_value * integral)
    return BoundReport(
        "general_bound",
        numerator / denominator,
        digest(xi_dec.coeffs, o_dec.coeffs, np.array([xi_dec.norm_sq, o_dec.norm_sq, k_value])),
        {"numerator": numerator, "denominator": denominator, "K": float(k_value),
         "integral_p2": integral},
    )


def optimal_variation(xi_dec: PauliDecomposition) -> PauliDecomposition:
    """Traceless maximizer of the ratio: c_O(P) proportional to 3^{s(P)} c_xi(P), c_O(I) = 0."""
    w = 3.0 ** size_table(xi_dec.n_qubits) * xi_dec.coeffs
    w[0] = 0.0
    if not np.any(w):
        raise ZeroOperatorError("observable is proportional to the identity")
    return PauliDecomposition.from_weights(w, xi_dec.n_qubits)


@dataclass(frozen=True, eq=False)
class ValidVariation:
    """delta_rho = witness_state - P_psi with witness_state a density matrix."""

    delta_rho: HermitianOperator
    witness_state: HermitianOperator

    def __post_init__(self):
        if abs(self.delta_rho.trace()) > 1e-10:
            raise ValueError("variation must be traceless")
        w = self.witness_state
        if abs(w.trace() - 1.0) > 1e-10 or float(w.eigvalsh()[0]) < -1e-10:
            raise ValueError("witness state must be a density matrix")

    @classmethod
    def from_witness(cls, psi: StateVector, witness: HermitianOperator) -> "ValidVariation":
        return cls(witness - density_of(psi), witness)

    def scaled(self, psi: StateVector, c: float) -> "ValidVariation":
        """c * delta_rho for 0 <= c <= 1, witnessed by (1 - c) P_psi + c rho'."""
        if not 0.0 <= c <= 1.0:
            raise ValueError("scale must lie in [0, 1] to keep the witness positive")
        p = density_of(psi)
        return ValidVariation(c * self.delta_rho, (1.0 - c) * p + c * self.witness_state)


def ghz_variation(n_qubits: int, phi: float) -> ValidVariation:
    """Relative-phase flip of the GHZ state: |GHZ_phi><GHZ_phi| - |GHZ><GHZ|.

    The difference lives on |0..0><1..1| + h.c., so its Pauli support is
    entirely at size N.
    """
    if n_qubits < 2:
        raise ValueError("n_qubits must be >= 2")
    if not 0.0 < phi < 2.0 * math.pi:
        raise ValueError("phi must lie in (0, 2 pi)")
    witness = density_of(make_ghz(n_qubits, phi))
    return ValidVariation.from_witness(make_ghz(n_qubits), witness)


def observable_independent_rhs(psi: StateVector, var: ValidVariation, tau: float = 1.0,
                               tol: float = 1e-9) -> BoundReport:
    """|tr[P_psi delta_rho]| / sqrt(2^N * int P(delta_rho, n)^2), with K fixed to 2^N.

    ``tau`` is bookkeeping for the left-hand side (tau times the fluctuation)
    and does not enter the value.
    """
    if var.delta_rho.n_qubits != psi.n_qubits:
        raise DimensionMismatchError("variation and target state act on different qubit counts")
    p = density_of(psi)
    if np.max(np.abs((var.witness_state - p).entries - var.delta_rho.entries)) > tol:
        raise ValueError("variation is not witnessed against this target state")
    n = psi.n_qubits
    numerator = abs(float(np.real(np.vdot(psi.amplitudes, var.delta_rho.entries @ psi.amplitudes))))
    key = digest(psi.amplitudes, var.delta_rho.entries)
    try:
        dec = decompose(var.delta_rho)
    except ZeroOperatorError:
        return BoundReport("observable_independent", 0.0, key,
                           {"numerator": 0.0, "denominator": 0.0, "K": 2.0**n, "tau": tau,
                            "zero_variation": 1.0})
    integral = integral_p2_exact(dec)
    denominator = math.sqrt(2.0**n * integral)
    dist = size_distribution(dec)
    return BoundReport(
        "observable_independent",
        numerator / denominator,
        key,
        {"numerator": numerator, "denominator": denominator, "K": 2.0**n, "tau": tau,
         "integral_p2": integral, "mean_size": float(np.dot(np.arange(n + 1), dist.probs))},
    )


# -- heuristic search over valid variations --------------------------------

EPS_GRID = np.logspace(-2, 2, 17)
PHI_GRID = np.pi * np.array([0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75])


def _pure_variation(psi: StateVector, other: np.ndarray) -> ValidVariation:
    v = other / np.linalg.norm(other)
    return ValidVariation.from_witness(psi, density_of(StateVector(psi.n_qubits, v)))


def _perturbation_trial(psi: StateVector, g: np.random.Generator):
    chi = haar_vector(psi.n_qubits, g)
    best = None
    for eps in EPS_GRID:
        var = _pure_variation(psi, psi.amplitudes + eps * chi)
        rep = observable_independent_rhs(psi, var)
        if best is None or rep.value > best[1].value:
            best = (var, rep)
    return best


def _phase_trial(psi: StateVector, g: np.random.Generator):
    amps = psi.amplitudes
    weights = np.abs(amps) ** 2
    idx = g.choice(amps.size, size=min(2, int(np.count_nonzero(weights > 1e-12))),
                   replace=False, p=weights / weights.sum())
    best = None
    for phi in PHI_GRID:
        kicked = amps.copy()
        kicked[idx[-1]] *= np.exp(1j * phi)
        var = _pure_variation(psi, kicked)
        rep = observable_independent_rhs(psi, var)
        if best is None or rep.value > best[1].value:
            best = (var, rep)
    return best


def search_variation(psi: StateVector, n_trials: int, rng, threads: int | None = None):
    """Randomized search for a large observable-independent ratio.

    Even trials apply a relative phase to one computational-basis component of
    psi drawn with probability |psi_z|^2 (for GHZ this includes the phase
    flip); odd trials mix psi with a random state chi, scanning the mixing
    amplitude on a log grid. Every candidate is a pure witness state, so the
    positivity constraint holds exactly. The result is a lower bound on the
    constrained maximum, not a certified optimum; ties keep the earliest trial.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    streams = _mc.spawn(rng, n_trials)
    tasks = [(i, g) for i, g in enumerate(streams)]

    def trial(i, g):
        return _phase_trial(psi, g) if i % 2 == 0 else _perturbation_trial(psi, g)

    results = _mc.map_ordered(trial, tasks, threads)
    best_i = 0
    for i, (_, rep) in enumerate(results):
        if rep.value > results[best_i][1].value:
            best_i = i
    var, rep = results[best_i]
    details = dict(rep.details)
    details.update({"n_trials": float(n_trials), "best_trial": float(best_i), "lower_bound_only": 1.0})
    return var, BoundReport(rep.kind, rep.value, rep.inputs_digest, details)

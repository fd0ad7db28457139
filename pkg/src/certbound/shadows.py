"""Classical-shadow estimators on simulated protocol data, and empirical
alpha-norms of their fluctuations.

The single-qubit snapshot |n><n| is inverted through the local channel
M^{-1}(A) = 3A - tr[A] I, so one shot estimates tr[xi rho] by

    xi~(n) = tr[(x)_i (3|n_i><n_i| - I) xi] = sum_P w_P 3^{s(P)} prod_i n_i^{a_i},

with w_P = tr[P xi]/2^N.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from . import _mc
from .bounds import BoundReport, size_bound
from .errors import DimensionMismatchError
from .husimi import CoherentConfig, bloch_kets, contract_pauli, sample_configs
from .pauli import decompose, pauli_traces
from .qstate import HermitianOperator, StateVector, expectation

# relative gap between full- and half-sample estimates that marks a heavy-tailed run
STABILITY_GAP = 0.2


@dataclass(frozen=True)
class FluctuationEstimate:
    """Estimate of ||xi~ - xi||_alpha = E[|xi~ - xi|^alpha]^(1/alpha)."""

    alpha: float
    value: float
    std_error: float
    n_samples: int
    xi_true: float
    converged: bool = True

    def __post_init__(self):
        if self.alpha < 2:
            raise ValueError("alpha must be >= 2")
        if self.value < 0:
            raise ValueError("fluctuation must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class BatchFluctuation:
    """E[|mean of M shots - xi|^alpha] next to the prediction ||xi~ - xi||_alpha^alpha / M^(alpha-1)."""

    alpha: int
    batch_size: int
    n_batches: int
    value: float
    std_error: float
    predicted: float
    predicted_iid: float
    single_shot: FluctuationEstimate

    def to_dict(self) -> dict:
        d = asdict(self)
        d["single_shot"] = self.single_shot.to_dict()
        return d


def snapshot_inverse(config: CoherentConfig) -> HermitianOperator:
    """(x)_i (3|n_i><n_i| - I)."""
    m = np.ones((1, 1), dtype=complex)
    for ket in bloch_kets(config.directions):
        m = np.kron(m, 3.0 * np.outer(ket, ket.conj()) - np.eye(2))
    return HermitianOperator(config.n_qubits, 0.5 * (m + m.conj().T))


def shadow_estimate(xi: HermitianOperator, config: CoherentConfig) -> float:
    if xi.n_qubits != config.n_qubits:
        raise DimensionMismatchError(f"{xi.n_qubits}-qubit observable vs {config.n_qubits}-qubit config")
    return expectation(xi, snapshot_inverse(config))


def shadow_weights(xi: HermitianOperator) -> np.ndarray:
    return pauli_traces(xi.entries) / 2**xi.n_qubits


def shadow_estimates(xi: HermitianOperator | np.ndarray, directions: np.ndarray) -> np.ndarray:
    """Batched shadow estimates for directions of shape (S, N, 3)."""
    w = shadow_weights(xi) if isinstance(xi, HermitianOperator) else xi
    d = np.asarray(directions, dtype=float)
    vec = np.concatenate([np.ones(d.shape[:-1] + (1,)), 3.0 * d], axis=-1)
    return contract_pauli(w, vec)


def _deviations(xi, rho, n_samples, rng, threads):
    if xi.n_qubits != rho.n_qubits:
        raise DimensionMismatchError("observable and state act on different qubit counts")
    w = shadow_weights(xi)
    xi_true = expectation(xi, rho)
    n = sample_configs(rho, n_samples, rng, threads)
    return shadow_estimates(w, n) - xi_true, xi_true


def _norm_from_moments(alpha: float, m: _mc.Moments) -> tuple[float, float]:
    mean = max(m.mean, 0.0)
    value = mean ** (1.0 / alpha)
    # delta method: d(m^(1/alpha)) = m^(1/alpha - 1) dm / alpha
    err = value / (alpha * mean) * m.std_error if mean > 0 else 0.0
    return value, err


def empirical_alpha_norm(xi: HermitianOperator, rho: HermitianOperator, alpha: float, n_samples: int,
                         rng, threads: int | None = None) -> FluctuationEstimate:
    """E[|xi~(n) - tr[xi rho]|^alpha]^(1/alpha) with n drawn from the protocol on rho.

    ``converged`` is False when the first-half estimate differs from the full
    one by more than 20%, a sign that the alpha-th moment is dominated by rare
    shots.
    """
    if alpha < 2:
        raise ValueError("alpha must be >= 2")
    dev, xi_true = _deviations(xi, rho, n_samples, rng, threads)
    powered = np.abs(dev) ** alpha
    value, err = _norm_from_moments(alpha, _mc.Moments.of(powered))
    half, _ = _norm_from_moments(alpha, _mc.Moments.of(powered[: n_samples // 2]))
    converged = value == 0.0 or abs(half - value) <= STABILITY_GAP * value
    return FluctuationEstimate(float(alpha), value, err, n_samples, xi_true, bool(converged))


def sample_mean_fluctuation(xi: HermitianOperator, rho: HermitianOperator, alpha: int, batch_size: int,
                            n_batches: int, rng, threads: int | None = None) -> BatchFluctuation:
    """E[|sample mean of ``batch_size`` shots - xi|^alpha] over ``n_batches`` batches.

    Odd moments are not supported. ``predicted`` is the leading-order relation
    ||xi~ - xi||_alpha^alpha / M^(alpha-1) using the single-shot norm measured
    on the same shots; ``predicted_iid`` is the exact iid moment of a mean,
    sigma^2/M for alpha = 2 and (mu_4 + 3(M-1) sigma^4)/M^3 for alpha = 4, from
    the same shots' central moments.
    """
    if alpha not in (2, 4):
        raise ValueError("alpha must be 2 or 4")
    if batch_size < 1 or n_batches < 2:
        raise ValueError("need batch_size >= 1 and n_batches >= 2")
    dev, xi_true = _deviations(xi, rho, batch_size * n_batches, rng, threads)
    means = dev.reshape(n_batches, batch_size).mean(axis=1)
    m = _mc.Moments.of(np.abs(means) ** alpha)
    single_val, single_err = _norm_from_moments(alpha, _mc.Moments.of(np.abs(dev) ** alpha))
    single = FluctuationEstimate(float(alpha), single_val, single_err, dev.size, xi_true)
    predicted = single_val**alpha / batch_size ** (alpha - 1)
    mu2 = float(np.mean(dev**2))
    if alpha == 2:
        iid = mu2 / batch_size
    else:
        iid = (float(np.mean(dev**4)) + 3.0 * (batch_size - 1) * mu2**2) / batch_size**3
    return BatchFluctuation(alpha, batch_size, n_batches, m.mean, m.std_error, predicted, iid, single)


@dataclass(frozen=True)
class Confrontation:
    empirical: FluctuationEstimate
    bound: BoundReport
    satisfied: bool
    fidelity: float | None = None

    def to_dict(self) -> dict:
        return {"empirical": self.empirical.to_dict(), "bound": self.bound.to_dict(),
                "satisfied": self.satisfied, "fidelity": self.fidelity}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def bound_confrontation(xi: HermitianOperator, psi: StateVector | None, rho: HermitianOperator, alpha: float,
                        n_samples: int, rng, threads: int | None = None) -> Confrontation:
    """Empirical alpha-norm of the shadow estimator against the size bound of xi.

    ``satisfied`` means empirical >= bound - 3 sigma. When ``psi`` is given,
    the fidelity <psi|rho|psi> of the lab state is recorded alongside.
    """
    emp = empirical_alpha_norm(xi, rho, alpha, n_samples, rng, threads)
    bound = size_bound(decompose(xi))
    fid = None
    if psi is not None:
        fid = float(np.real(np.vdot(psi.amplitudes, rho.entries @ psi.amplitudes)))
    ok = emp.value >= bound.value - 3.0 * emp.std_error
    return Confrontation(emp, bound, bool(ok), fid)


__all__ = [
    "FluctuationEstimate", "BatchFluctuation", "Confrontation", "snapshot_inverse", "shadow_estimate",
    "shadow_estimates", "empirical_alpha_norm", "sample_mean_fluctuation", "bound_confrontation",
]


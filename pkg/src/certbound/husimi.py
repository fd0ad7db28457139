"""Spin coherent states, the Husimi function and integrals over outcomes.

A measurement outcome of the local random-direction protocol is a product of
spin coherent states |n> = |n_1> ... |n_N>, each n_i a unit vector on S^2.
Outcomes are distributed with density P(rho, n) / (2 pi)^N, where
P(rho, n) = <n|rho|n> is the Husimi function.

Batched routines take directions as a float array of shape (S, N, 3).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import _mc
from .errors import DimensionMismatchError, DivergenceError
from .pauli import PauliDecomposition, pauli_traces, size_table
from .qstate import HermitianOperator, StateVector

UNIT_TOL = 1e-12
PROB_TOL = 1e-12
# Pauli-contraction batches are capped at this many floats in flight
_EVAL_BUDGET = 1 << 22


@dataclass(frozen=True, eq=False)
class CoherentConfig:
    """One outcome n = (n_1, ..., n_N) of the protocol."""

    n_qubits: int
    directions: np.ndarray

    def __post_init__(self):
        d = np.array(self.directions, dtype=float).reshape(-1, 3)
        if d.shape[0] != self.n_qubits:
            raise ValueError(f"expected {self.n_qubits} directions, got {d.shape[0]}")
        norms = np.linalg.norm(d, axis=1)
        if np.any(np.abs(norms - 1.0) > UNIT_TOL):
            raise ValueError("every direction must be a unit vector")
        d.setflags(write=False)
        object.__setattr__(self, "directions", d)

    @classmethod
    def from_directions(cls, directions) -> "CoherentConfig":
        d = np.asarray(directions, dtype=float).reshape(-1, 3)
        return cls(d.shape[0], d)


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    n_samples: int

    @classmethod
    def from_moments(cls, m: _mc.Moments, scale: float = 1.0) -> "McEstimate":
        return cls(scale * m.mean, abs(scale) * m.std_error, m.count)

    def to_dict(self) -> dict:
        return {"value": self.value, "std_error": self.std_error, "n_samples": self.n_samples}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


# -- single-site helpers ---------------------------------------------------

def bloch_kets(directions: np.ndarray) -> np.ndarray:
    """Kets with Bloch vector n: (cos(theta/2), e^{i phi} sin(theta/2)).

    Works on any array whose last axis has length 3; returns last axis 2.
    """
    n = np.asarray(directions, dtype=float)
    x, y, z = n[..., 0], n[..., 1], n[..., 2]
    up = np.sqrt(np.clip((1.0 + z) / 2.0, 0.0, None))
    south = up < 1e-150
    safe = np.where(south, 1.0, up)
    down = np.where(south, 1.0 + 0j, (x + 1j * y) / (2.0 * safe))
    return np.stack([up + 0j, down], axis=-1)


def uniform_directions(rng: np.random.Generator, shape) -> np.ndarray:
    """Uniform points on S^2 via uniform z and uniform azimuth."""
    shape = tuple(np.atleast_1d(shape))
    z = rng.uniform(-1.0, 1.0, size=shape)
    phi = rng.uniform(0.0, 2.0 * np.pi, size=shape)
    r = np.sqrt(1.0 - z * z)
    n = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)
    return n / np.linalg.norm(n, axis=-1, keepdims=True)


def coherent_state(config: CoherentConfig) -> StateVector:
    psi = np.ones(1, dtype=complex)
    for ket in bloch_kets(config.directions):
        psi = np.kron(psi, ket)
    return StateVector(config.n_qubits, psi / np.linalg.norm(psi))


def husimi_value(rho: HermitianOperator, config: CoherentConfig) -> float:
    """<n|rho|n> evaluated directly on the product ket."""
    if rho.n_qubits != config.n_qubits:
        raise DimensionMismatchError(f"{rho.n_qubits}-qubit operator vs {config.n_qubits}-qubit config")
    v = coherent_state(config).amplitudes
    return float(np.real(np.vdot(v, rho.entries @ v)))


# -- batched evaluation through Pauli weights ------------------------------

def contract_pauli(weights: np.ndarray, site_vectors: np.ndarray) -> np.ndarray:
    """sum_P weights[P] prod_i site_vectors[:, i, P_i] for a batch of samples.

    ``weights`` is indexed by packed Pauli code (length 4^N) and
    ``site_vectors`` has shape (S, N, 4).
    """
    s, n, _ = site_vectors.shape
    out = np.empty(s)
    step = max(1, _EVAL_BUDGET // max(1, 4 ** (n - 1)))
    w = np.asarray(weights, dtype=float).reshape(4, -1)
    for lo in range(0, s, step):
        v = site_vectors[lo:lo + step]
        t = v[:, 0, :] @ w
        for i in range(1, n):
            t = np.einsum("sa,sab->sb", v[:, i, :], t.reshape(t.shape[0], 4, -1))
        out[lo:lo + step] = t.reshape(-1)
    return out


def _with_identity(directions: np.ndarray, scale: float = 1.0) -> np.ndarray:
    ones = np.ones(directions.shape[:-1] + (1,))
    return np.concatenate([ones, scale * directions], axis=-1)


def husimi_weights(op: HermitianOperator) -> np.ndarray:
    return pauli_traces(op.entries) / 2**op.n_qubits


def husimi_batch(op: HermitianOperator | np.ndarray, directions: np.ndarray) -> np.ndarray:
    """P(op, n) for a batch; ``op`` may be given as its Pauli weight vector.

    Uses <n|P|n> = prod_i n_i^{a_i}, so P(op, n) = sum_P w_P prod_i n_i^{a_i}.
    """
    w = husimi_weights(op) if isinstance(op, HermitianOperator) else op
    return contract_pauli(w, _with_identity(np.asarray(directions, dtype=float)))


# -- the measurement protocol ----------------------------------------------

def _protocol(rho: np.ndarray, v: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Eigenvalues alpha for shots with directions v and uniforms u, shape (S, N)."""
    count, n_qubits, _ = v.shape
    alpha = np.empty((count, n_qubits))
    cond = np.broadcast_to(rho, (count,) + rho.shape)
    for i in range(n_qubits):
        rest = 2 ** (n_qubits - i - 1)
        t = cond.reshape(count, 2, rest, 2, rest)
        red = np.einsum("sarbr->sab", t)
        tr = np.real(red[:, 0, 0] + red[:, 1, 1])
        if np.any(tr <= 0):
            raise ValueError("conditional state has non-positive trace: rho is not a density matrix")
        bloch = np.stack([
            2 * np.real(red[:, 1, 0]),
            2 * np.imag(red[:, 1, 0]),
            np.real(red[:, 0, 0] - red[:, 1, 1]),
        ], axis=-1) / tr[:, None]
        p_plus = 0.5 * (1.0 + np.einsum("sa,sa->s", bloch, v[:, i]))
        if np.any(p_plus < -PROB_TOL) or np.any(p_plus > 1 + PROB_TOL):
            raise ValueError("negative outcome probability: rho is not a density matrix")
        alpha[:, i] = np.where(u[:, i] < p_plus, 1.0, -1.0)
        if rest > 1:
            ket = bloch_kets(alpha[:, i, None] * v[:, i])
            cond = np.einsum("sa,sarbq,sb->srq", ket.conj(), t, ket)
            cond = cond / np.real(np.einsum("srr->s", cond))[:, None, None]
    return alpha


def _sample_chunk(rho: np.ndarray, n_qubits: int, rng: np.random.Generator, count: int):
    """Sequential protocol for ``count`` shots: returns (n, v, alpha)."""
    v = uniform_directions(rng, (count, n_qubits))
    u = rng.uniform(size=(count, n_qubits))
    step = max(1, _EVAL_BUDGET // (rho.shape[0] ** 2))
    alpha = np.concatenate([_protocol(rho, v[lo:lo + step], u[lo:lo + step])
                            for lo in range(0, count, step)])
    n = alpha[..., None] * v
    return n, v, alpha


def sample_configs(rho: HermitianOperator, n_samples: int, rng, threads: int | None = None,
                   return_outcomes: bool = False):
    """Draw ``n_samples`` outcomes of the protocol on ``rho``.

    Each site in turn gets a uniform direction v_i; the eigenvalue alpha_i = +/-1
    of v_i . sigma is drawn with its Born probability on the conditional state,
    the site is projected onto |alpha_i v_i>, and n_i = alpha_i v_i.

    Returns directions of shape (n_samples, N, 3); with ``return_outcomes`` also
    the raw directions v and eigenvalues alpha.
    """
    m = np.asarray(rho.entries)

    def job(g, count):
        return _sample_chunk(m, rho.n_qubits, g, count)

    parts = _mc.map_chunks(job, n_samples, rng, threads)
    n = np.concatenate([p[0] for p in parts])
    if not return_outcomes:
        return n
    return n, np.concatenate([p[1] for p in parts]), np.concatenate([p[2] for p in parts])


def sample_config(rho: HermitianOperator, rng) -> CoherentConfig:
    """A single outcome of the protocol; ``rng`` is advanced in place."""
    n, _, _ = _sample_chunk(np.asarray(rho.entries), rho.n_qubits, _mc.as_generator(rng), 1)
    return CoherentConfig(rho.n_qubits, n[0])


# -- integrals -------------------------------------------------------------

def integral_p2_exact(dec: PauliDecomposition) -> float:
    """Closed form of the integral of P(O, n)^2 dn / (2 pi)^N.

    Equals 2^N sum_P 3^{-s(P)} w_P^2, since the sphere average of
    n^a n^b is delta_ab / 3.
    """
    n = dec.n_qubits
    return float(2**n * dec.norm_sq * np.sum(np.power(3.0, -size_table(n)) * dec.coeffs**2))


def integral_p2_mc(op: HermitianOperator, n_samples: int, rng, threads: int | None = None) -> McEstimate:
    """MC estimate of the integral of P(O, n)^2 dn / (2 pi)^N, uniform sampling."""
    if n_samples < 100:
        raise ValueError("n_samples must be at least 100")
    w = husimi_weights(op)
    n = op.n_qubits

    def job(g, count):
        p = husimi_batch(w, uniform_directions(g, (count, n)))
        return _mc.Moments.of(p * p)

    m = _mc.merge_all(_mc.map_chunks(job, n_samples, rng, threads))
    # uniform density on (S^2)^N is 1/(4 pi)^N, hence the factor 2^N
    return McEstimate.from_moments(m, scale=2.0**n)


def k_exponent(alpha: float) -> float:
    """Delta = 2/(alpha - 2)."""
    return 2.0 / (alpha - 2.0)


def k_factor_mc(rho: HermitianOperator, alpha: float, n_samples: int, rng,
                threads: int | None = None, rank_tol: float = 1e-10) -> McEstimate:
    """MC estimate of K = [integral of P(rho, n)^{-Delta} dn/(2 pi)^N]^{(alpha-2)/alpha}.

    Rank-deficient rho needs alpha > 4: near a Husimi zero the integrand goes
    like r^{-2 Delta} in two transverse dimensions, integrable only for Delta < 1.
    The error is propagated to K by the delta method.
    """
    if alpha <= 2:
        raise ValueError("alpha must exceed 2")
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    if float(rho.eigvalsh()[0]) < rank_tol and alpha <= 4:
        raise ValueError("rank-deficient rho: the K integral converges only for alpha > 4")
    delta = k_exponent(alpha)
    power = (alpha - 2.0) / alpha
    n = rho.n_qubits
    w = husimi_weights(rho)

    def job(g, count):
        p = husimi_batch(w, uniform_directions(g, (count, n)))
        if np.any(p <= 0):
            raise DivergenceError("Husimi function vanished at a sample point")
        f = p ** (-delta)
        half = count // 2
        return _mc.Moments.of(f[:half]), _mc.Moments.of(f[half:])

    parts = _mc.map_chunks(job, n_samples, rng, threads)
    first = _mc.merge_all([a for a, _ in parts])
    total = _mc.merge_all([a for a, _ in parts] + [b for _, b in parts])
    if not np.isfinite(total.mean) or abs(first.mean - total.mean) > 0.5 * abs(total.mean):
        raise DivergenceError(
            f"K integral unstable: half-sample mean {first.mean:.4g} vs full {total.mean:.4g}")
    integral = 2.0**n * total.mean
    value = integral**power
    err = value * power * (2.0**n * total.std_error) / integral
    return McEstimate(float(value), float(err), total.count)


def sphere_cell_moments(z_edges: np.ndarray, phi_edges: np.ndarray) -> np.ndarray:
    """Integrals of (1, n_x, n_y, n_z) d(solid angle) over every (z, phi) cell.

    Returns shape (len(z_edges)-1, len(phi_edges)-1, 4). Used to build exact
    expected bin probabilities of sampled outcomes.
    """
    z = np.asarray(z_edges, dtype=float)
    p = np.asarray(phi_edges, dtype=float)
    dz = np.diff(z)
    dphi = np.diff(p)

    def arc(t):
        # antiderivative of sqrt(1 - z^2)
        return 0.5 * (t * np.sqrt(1 - t * t) + np.arcsin(t))

    s_int = np.diff(arc(z))
    z_int = 0.5 * np.diff(z * z)
    cos_int = np.diff(np.sin(p))
    sin_int = -np.diff(np.cos(p))
    out = np.empty((dz.size, dphi.size, 4))
    out[..., 0] = dz[:, None] * dphi[None, :]
    out[..., 1] = s_int[:, None] * cos_int[None, :]
    out[..., 2] = s_int[:, None] * sin_int[None, :]
    out[..., 3] = z_int[:, None] * dphi[None, :]
    return out


def gauss_sphere_grid(n_nodes: int = 64):
    """Product Gauss-Legendre (in cos theta) x uniform azimuth grid on S^2.

    Returns (directions (M, 3), weights (M,)) with weights summing to 4 pi.
    """
    z, wz = np.polynomial.legendre.leggauss(n_nodes)
    n_phi = 2 * n_nodes
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    r = np.sqrt(1 - z * z)
    dirs = np.stack([
        np.outer(r, np.cos(phi)), np.outer(r, np.sin(phi)), np.outer(z, np.ones(n_phi))
    ], axis=-1).reshape(-1, 3)
    weights = np.outer(wz, np.full(n_phi, 2 * np.pi / n_phi)).reshape(-1)
    return dirs, weights


__all__ = [
    "CoherentConfig", "McEstimate", "bloch_kets", "uniform_directions", "coherent_state",
    "husimi_value", "husimi_batch", "contract_pauli", "sample_config", "sample_configs",
    "integral_p2_exact", "integral_p2_mc", "k_factor_mc", "k_exponent",
    "sphere_cell_moments", "gauss_sphere_grid",
]

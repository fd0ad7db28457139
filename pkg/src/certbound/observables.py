"""Certification observables: fidelity projector, shadow overlap and its
local-Haar randomized average, plus the t diagnostic and its statistics over
Haar states.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import _mc
from .husimi import McEstimate
from .pauli import SizeDistribution, decompose, pauli_traces, size_distribution, size_table
from .qstate import OPERATOR_CAP, HermitianOperator, StateVector, check_cap, density_of, haar_vector
from .errors import ZeroOperatorError

# branches whose conditional single-site state has squared norm below this are skipped
BRANCH_CUTOFF = 1e-24
UNITARY_CHUNK = 256

# (t_mean, t_std, M) per N
REFERENCE_T_STATS = {
    2: (0.5183, 0.1105, 1000),
    3: (0.4271, 0.0514, 500),
    4: (0.3820, 0.0258, 200),
    5: (0.3528, 0.0134, 100),
    6: (0.3331, 0.0072, 100),
    7: (0.3186, 0.0047, 100),
}


def fidelity_observable(psi: StateVector) -> HermitianOperator:
    """|psi><psi|; its Pauli norm_sq is exactly 1/2^N."""
    return density_of(psi)


def haar_fidelity_size_dist(n_qubits: int) -> SizeDistribution:
    """Haar-ensemble size distribution of the fidelity projector.

    probs[s] = C(N, s) 3^s / (2^N (2^N + 1)) for s > 0; probs[0] takes the rest.
    """
    if n_qubits < 1:
        raise ValueError("n_qubits must be >= 1")
    d = 2.0**n_qubits
    probs = np.array([math.comb(n_qubits, s) * 3.0**s for s in range(n_qubits + 1)]) / (d * (d + 1))
    probs[0] = 1.0 - probs[1:].sum()
    return SizeDistribution(n_qubits, probs)


def _shadow_overlap_matrices(psis: np.ndarray) -> np.ndarray:
    """Shadow-overlap operators for a batch of state vectors, shape (B, d, d).

    For each site k and each bit string z on the other sites, the conditional
    site-k vector phi = <z|psi> contributes |z><z| (x) |phi><phi| / <phi|phi>.
    """
    psis = np.asarray(psis, dtype=complex)
    b, d = psis.shape
    n = d.bit_length() - 1
    r = d // 2
    t = psis.reshape((b,) + (2,) * n)
    out = np.zeros((b,) + (2,) * (2 * n), dtype=complex)
    diag = np.arange(r)
    for k in range(n):
        phi = np.moveaxis(t, 1 + k, -1).reshape(b, r, 2)
        norm = np.sum(np.abs(phi) ** 2, axis=-1)
        keep = norm >= BRANCH_CUTOFF
        inv = np.where(keep, 1.0 / np.where(keep, norm, 1.0), 0.0)
        blocks = phi[..., :, None] * phi[..., None, :].conj() * inv[..., None, None]
        full = np.zeros((b, r, 2, r, 2), dtype=complex)
        full[:, diag, :, diag, :] = np.swapaxes(blocks, 0, 1)
        # layout is (rest, k, rest', k'); put site k back in place on both sides
        full = full.reshape((b,) + (2,) * (n - 1) + (2,) + (2,) * (n - 1) + (2,))
        full = np.moveaxis(full, n, 1 + k)
        full = np.moveaxis(full, 2 * n, 1 + n + k)
        out += full
    return out.reshape(b, d, d) / n


def shadow_overlap_observable(psi: StateVector) -> HermitianOperator:
    """Site-averaged shadow-overlap operator L_psi, with <psi|L_psi|psi> = 1."""
    if psi.n_qubits < 2:
        raise ValueError("the shadow overlap needs at least 2 qubits")
    check_cap(psi.n_qubits, OPERATOR_CAP)
    m = _shadow_overlap_matrices(psi.amplitudes[None, :])[0]
    return HermitianOperator(psi.n_qubits, 0.5 * (m + m.conj().T))


def haar_unitaries(rng: np.random.Generator, count: int) -> np.ndarray:
    """``count`` Haar-random 2x2 unitaries: QR of a complex Ginibre matrix with R's phases fixed."""
    z = (rng.standard_normal((count, 2, 2)) + 1j * rng.standard_normal((count, 2, 2))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (diag / np.abs(diag))[:, None, :]


def _kron_batch(us: np.ndarray) -> np.ndarray:
    """(B, N, 2, 2) single-site unitaries -> (B, 2^N, 2^N) tensor products."""
    b, n = us.shape[:2]
    out = us[:, 0]
    for k in range(1, n):
        dim = out.shape[-1] * 2
        out = np.einsum("bij,bkl->bikjl", out, us[:, k]).reshape(b, dim, dim)
    return out


@dataclass(frozen=True)
class _OverlapChunk:
    total: np.ndarray
    sq_re: np.ndarray
    sq_im: np.ndarray
    weights: np.ndarray  # per-sample Pauli weights, (count, 4^N)


def _overlap_chunk(psi: np.ndarray, n_qubits: int, rng: np.random.Generator, count: int) -> _OverlapChunk:
    us = haar_unitaries(rng, count * n_qubits).reshape(count, n_qubits, 2, 2)
    u = _kron_batch(us)
    rotated = u @ psi
    a = np.conj(np.swapaxes(u, -1, -2)) @ _shadow_overlap_matrices(rotated) @ u
    return _OverlapChunk(
        a.sum(axis=0),
        np.sum(a.real**2, axis=0),
        np.sum(a.imag**2, axis=0),
        pauli_traces(a) / 2**n_qubits,
    )


def _sample_overlap(psi: StateVector, n_unitaries: int, rng, threads: int | None):
    if psi.n_qubits < 2:
        raise ValueError("the shadow overlap needs at least 2 qubits")
    if n_unitaries < 10:
        raise ValueError("n_unitaries must be at least 10")
    check_cap(psi.n_qubits, OPERATOR_CAP)
    amps = psi.amplitudes

    def job(g, count):
        return _overlap_chunk(amps, psi.n_qubits, g, count)

    return _mc.map_chunks(job, n_unitaries, rng, threads, chunk_size=UNITARY_CHUNK)


@dataclass(frozen=True, eq=False)
class RandomizedAverage:
    """MC mean of U^dag L_{U psi} U over product Haar unitaries U."""

    operator: HermitianOperator
    n_unitaries: int
    per_entry_std_error: float
    entry_std_errors: np.ndarray = field(repr=False)


def randomized_overlap(psi: StateVector, n_unitaries: int, rng, threads: int | None = None) -> RandomizedAverage:
    parts = _sample_overlap(psi, n_unitaries, rng, threads)
    n = n_unitaries
    mean = sum(p.total for p in parts) / n
    sq_re = sum(p.sq_re for p in parts) / n
    sq_im = sum(p.sq_im for p in parts) / n
    var = (np.clip(sq_re - mean.real**2, 0, None) + np.clip(sq_im - mean.imag**2, 0, None)) * n / (n - 1)
    se = np.sqrt(var / n)
    op = HermitianOperator(psi.n_qubits, 0.5 * (mean + mean.conj().T))
    return RandomizedAverage(op, n, float(se.max()), se)


def t_function(psi: StateVector, omega: HermitianOperator) -> float:
    """norm_sq(omega) * sum_{s>0} 3^s probs[s] of omega's size distribution."""
    if omega.n_qubits != psi.n_qubits:
        raise ValueError("psi and omega act on different numbers of qubits")
    dec = decompose(omega)
    probs = size_distribution(dec).probs
    s = np.arange(1, dec.n_qubits + 1)
    return float(dec.norm_sq * np.sum(3.0**s * probs[1:]))


def t_estimate(psi: StateVector, n_unitaries: int, rng, threads: int | None = None) -> McEstimate:
    """t for the randomized overlap of ``psi``, corrected for MC noise.

    Plugging the MC mean of the randomized overlap into t overshoots by
    sum_P 3^s Var(w_P)/n, since t is quadratic in the Pauli weights w_P. Each
    squared mean is replaced by its unbiased estimate mean^2 - var/n. The
    error comes from the linearization t ~ 2 sum_P 3^s w_P w_P^(i).
    """
    parts = _sample_overlap(psi, n_unitaries, rng, threads)
    w = np.concatenate([p.weights for p in parts])
    n = w.shape[0]
    gen = 3.0 ** size_table(psi.n_qubits)
    gen[0] = 0.0
    mean = w.mean(axis=0)
    var = w.var(axis=0, ddof=1)
    value = float(np.sum(gen * (mean**2 - var / n)))
    lin = 2.0 * w @ (gen * mean)
    return McEstimate(value, float(lin.std(ddof=1) / np.sqrt(n)), n)


@dataclass(frozen=True)
class Table1Row:
    n_qubits: int
    t_mean: float
    t_std: float
    n_states: int
    n_unitaries: int
    seed: int
    mc_error: float  # MC standard error of t_mean from the unitary averages

    def as_dict(self) -> dict:
        return {
            "N": self.n_qubits, "t_mean": self.t_mean, "t_std": self.t_std, "M": self.n_states,
            "n_unitaries": self.n_unitaries, "seed": self.seed, "mc_error": self.mc_error,
        }


def table1_experiment(n_qubits: int, n_states: int, n_unitaries: int, seed: int,
                      threads: int | None = None, return_samples: bool = False):
    """Mean and sample standard deviation of t over ``n_states`` Haar states.

    With ``return_samples`` the per-state estimates (McEstimate list) are
    returned alongside the row.
    """
    if n_states < 2:
        raise ValueError("need at least two states for a standard deviation")
    streams = _mc.spawn(seed, n_states)

    def one(g):
        psi = StateVector(n_qubits, haar_vector(n_qubits, g))
        return t_estimate(psi, n_unitaries, g, threads=1)

    est = _mc.map_ordered(one, [(g,) for g in streams], threads)
    ts = np.array([e.value for e in est])
    mc = float(np.sqrt(np.sum([e.std_error**2 for e in est])) / n_states)
    row = Table1Row(n_qubits, float(ts.mean()), float(ts.std(ddof=1)), n_states, n_unitaries, int(seed), mc)
    return (row, est) if return_samples else row


TABLE1_HEADER = ["N", "t_mean", "t_std", "M", "n_unitaries", "seed"]


def table1_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE1_HEADER)
    for r in rows:
        w.writerow([r.n_qubits, f"{r.t_mean:.10g}", f"{r.t_std:.10g}", r.n_states, r.n_unitaries, r.seed])
    return buf.getvalue()


__all__ = [
    "REFERENCE_T_STATS", "fidelity_observable", "haar_fidelity_size_dist", "shadow_overlap_observable",
    "haar_unitaries", "RandomizedAverage", "randomized_overlap", "t_function", "t_estimate",
    "Table1Row", "table1_experiment", "table1_csv", "ZeroOperatorError",
]

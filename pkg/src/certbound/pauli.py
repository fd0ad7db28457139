"""Pauli-string algebra, operator size distributions and size moments.

A Pauli string on N qubits is packed into an integer with two bits per site
(I=0, X=1, Y=2, Z=3), qubit 1 in the most significant pair. The packed code is
also the position of the string in the dense coefficient arrays used
throughout, so ``coeffs[code]`` is the coefficient of that string.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Mapping

import numpy as np

from .errors import ZeroOperatorError
from .qstate import OPERATOR_CAP, HermitianOperator, check_cap

LETTERS = "IXYZ"
ZERO_CUTOFF = 1e-14
# operators with tr[op^2]/2^N below this are treated as zero
ZERO_NORM_SQ = 1e-28
NORMALIZATION_TOL = 1e-9

SINGLE_QUBIT = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

_PAIR_MASK = int("01" * 32, 2)


@dataclass(frozen=True, order=True)
class PauliString:
    n_qubits: int
    code: int

    def __post_init__(self):
        if not 1 <= self.n_qubits <= 32:
            raise ValueError("Pauli strings are packed for 1..32 qubits")
        if not 0 <= self.code < 4**self.n_qubits:
            raise ValueError(f"code {self.code} out of range for {self.n_qubits} qubits")

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        code = 0
        for ch in label.upper():
            if ch not in LETTERS:
                raise ValueError(f"invalid Pauli letter {ch!r} in {label!r}")
            code = (code << 2) | LETTERS.index(ch)
        return cls(len(label), code)

    @property
    def letters(self) -> tuple[int, ...]:
        return tuple((self.code >> (2 * (self.n_qubits - 1 - k))) & 3 for k in range(self.n_qubits))

    @property
    def label(self) -> str:
        return "".join(LETTERS[a] for a in self.letters)

    @property
    def size(self) -> int:
        """Number of non-identity letters."""
        return ((self.code | (self.code >> 1)) & _PAIR_MASK).bit_count()

    def __str__(self) -> str:
        return self.label


@lru_cache(maxsize=None)
def size_table(n_qubits: int) -> np.ndarray:
    """size(P) for every packed code 0..4^N-1."""
    sizes = np.zeros(1, dtype=np.int64)
    for _ in range(n_qubits):
        sizes = (sizes[:, None] + np.array([0, 1, 1, 1])[None, :]).ravel()
    sizes.setflags(write=False)
    return sizes


def matrix_of(p: PauliString) -> HermitianOperator:
    check_cap(p.n_qubits, OPERATOR_CAP)
    m = np.ones((1, 1), dtype=complex)
    for a in p.letters:
        m = np.kron(m, SINGLE_QUBIT[a])
    return HermitianOperator(p.n_qubits, m)


def pauli_traces(matrix: np.ndarray) -> np.ndarray:
    """tr[P A] for every Pauli string P, as a real array indexed by packed code.

    Works one site at a time on the (row, column) index pair of that site, so
    the cost is O(N 4^N) instead of 4^N separate traces. Leading axes of
    ``matrix`` are treated as a batch.
    """
    m = np.asarray(matrix, dtype=complex)
    batch = m.shape[:-2]
    nb = len(batch)
    n = m.shape[-1].bit_length() - 1
    t = m.reshape(batch + (2,) * (2 * n))
    # interleave (i_k, j_k) so each site's index pair is adjacent
    t = t.transpose(list(range(nb)) + [nb + x for k in range(n) for x in (k, n + k)])
    for _ in range(n):
        # sum_{ij} A_ij sigma_ji; the new letter axis goes to the back
        t = np.tensordot(t, SINGLE_QUBIT, axes=([nb, nb + 1], [2, 1]))
    return np.ascontiguousarray(t.real).reshape(batch + (4**n,))


def pauli_sum(weights: np.ndarray, n_qubits: int) -> np.ndarray:
    """Dense matrix sum_P weights[P] P (inverse of ``pauli_traces`` up to 2^N)."""
    t = np.asarray(weights, dtype=complex).reshape((4,) * n_qubits)
    for _ in range(n_qubits):
        t = np.tensordot(t, SINGLE_QUBIT, axes=([0], [0]))
    # axes are now (i_1, j_1, ..., i_N, j_N)
    t = t.transpose([2 * k for k in range(n_qubits)] + [2 * k + 1 for k in range(n_qubits)])
    d = 2**n_qubits
    return t.reshape(d, d)


@dataclass(frozen=True, eq=False)
class PauliDecomposition:
    """op = sqrt(norm_sq) * sum_P coeffs[P] P with sum_P coeffs[P]^2 = 1.

    ``norm_sq`` is tr[op^2]/2^N. A zero operator is represented only with
    ``norm_sq = 0`` (coefficients are then unconstrained).
    """

    n_qubits: int
    norm_sq: float
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).reshape(-1)
        if c.size != 4**self.n_qubits:
            raise ValueError(f"expected {4**self.n_qubits} coefficients, got {c.size}")
        if self.norm_sq < 0:
            raise ValueError("norm_sq must be non-negative")
        if self.norm_sq > 0 and abs(float(c @ c) - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"coefficients not normalized: sum c^2 = {float(c @ c)!r}")
        c[np.abs(c) < ZERO_CUTOFF] = 0.0
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "norm_sq", float(self.norm_sq))

    @classmethod
    def from_weights(cls, weights: np.ndarray, n_qubits: int) -> "PauliDecomposition":
        """Build from unnormalized weights w_P, i.e. op = sum_P w_P P."""
        w = np.asarray(weights, dtype=float).reshape(-1)
        norm_sq = float(w @ w)
        if norm_sq <= ZERO_NORM_SQ:
            raise ZeroOperatorError("operator is zero; Pauli coefficients are undefined")
        return cls(n_qubits, norm_sq, w / np.sqrt(norm_sq))

    @property
    def weights(self) -> np.ndarray:
        """w_P = tr[P op]/2^N."""
        return np.sqrt(self.norm_sq) * self.coeffs

    def __getitem__(self, key: PauliString | str) -> float:
        if isinstance(key, str):
            key = PauliString.from_label(key)
        if key.n_qubits != self.n_qubits:
            raise KeyError(f"{key} does not act on {self.n_qubits} qubits")
        return float(self.coeffs[key.code])

    def terms(self) -> Iterator[tuple[PauliString, float]]:
        for code in np.flatnonzero(self.coeffs):
            yield PauliString(self.n_qubits, int(code)), float(self.coeffs[code])

    def as_dict(self) -> Mapping[str, float]:
        return {p.label: c for p, c in self.terms()}

    def to_json(self) -> str:
        terms = [{"string": p.label, "coeff": c} for p, c in self.terms()]
        return json.dumps({"n_qubits": self.n_qubits, "norm_sq": self.norm_sq, "terms": terms})

    @classmethod
    def from_json(cls, text: str) -> "PauliDecomposition":
        data = json.loads(text)
        terms = data["terms"]
        n = int(data.get("n_qubits") or len(terms[0]["string"]))
        c = np.zeros(4**n)
        for t in terms:
            c[PauliString.from_label(t["string"]).code] = t["coeff"]
        return cls(n, float(data["norm_sq"]), c)


@dataclass(frozen=True, eq=False)
class SizeDistribution:
    n_qubits: int
    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float).reshape(-1)
        if p.size != self.n_qubits + 1:
            raise ValueError(f"expected {self.n_qubits + 1} entries, got {p.size}")
        if np.any(p < -1e-15):
            raise ValueError("size probabilities must be non-negative")
        if abs(p.sum() - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"size distribution sums to {p.sum()!r}")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def to_json(self) -> str:
        return json.dumps({"n_qubits": self.n_qubits, "probs": self.probs.tolist()})


def decompose(op: HermitianOperator) -> PauliDecomposition:
    n = op.n_qubits
    check_cap(n, OPERATOR_CAP)
    weights = pauli_traces(op.entries) / 2**n
    # Parseval: tr[op^2]/2^N equals the sum of squared weights
    norm_sq = float(weights @ weights)
    if norm_sq <= ZERO_NORM_SQ:
        raise ZeroOperatorError("operator is zero; Pauli coefficients are undefined")
    return PauliDecomposition(n, norm_sq, weights / np.sqrt(norm_sq))


def reconstruct(dec: PauliDecomposition) -> HermitianOperator:
    m = pauli_sum(dec.weights, dec.n_qubits)
    return HermitianOperator(dec.n_qubits, 0.5 * (m + m.conj().T))


def size_distribution(dec: PauliDecomposition) -> SizeDistribution:
    probs = np.bincount(size_table(dec.n_qubits), weights=dec.coeffs**2, minlength=dec.n_qubits + 1)
    return SizeDistribution(dec.n_qubits, probs)


def size_moment(dist: SizeDistribution, base: float) -> float:
    """sum_s base^s probs[s]; with base 3 this is the size generating function."""
    if base <= 0:
        raise ValueError("base must be positive")
    s = np.arange(dist.n_qubits + 1)
    return float(np.sum(np.power(float(base), s) * dist.probs))

"""Dense pure states, density matrices and Hermitian operators.

Qubit 1 is the most significant bit of the computational-basis index
(big-endian): ``|z_1 z_2 ... z_N>`` sits at index ``sum_k z_k 2**(N-k)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._mc import as_generator
from .errors import CapExceededError, DimensionMismatchError

STATE_CAP = 20
OPERATOR_CAP = 12

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12


def check_cap(n_qubits: int, cap: int = OPERATOR_CAP) -> None:
    if n_qubits < 1:
        raise ValueError(f"n_qubits must be >= 1, got {n_qubits}")
    if n_qubits > cap:
        raise CapExceededError(f"{n_qubits} qubits exceeds the cap of {cap}")


def _qubits_for_dim(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 2 or (1 << n) != dim:
        raise ValueError(f"dimension {dim} is not a power of two >= 2")
    return n


def _complex_pairs(arr: np.ndarray) -> list:
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


def _from_pairs(pairs) -> np.ndarray:
    a = np.asarray(pairs, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


@dataclass(frozen=True, eq=False)
class StateVector:
    """Unit-norm amplitude vector of an N-qubit pure state."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        check_cap(self.n_qubits, STATE_CAP)
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != 2**self.n_qubits:
            raise ValueError(f"expected {2**self.n_qubits} amplitudes, got {amps.size}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized: |psi|^2 = {norm!r}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_array(cls, amplitudes, normalize: bool = False) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        if normalize:
            amps = amps / np.linalg.norm(amps)
        return cls(_qubits_for_dim(amps.size), amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def overlap(self, other: "StateVector") -> complex:
        """<self|other>."""
        _same_size(self.n_qubits, other.n_qubits)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def to_json(self) -> str:
        return json.dumps({"n_qubits": self.n_qubits, "amplitudes": _complex_pairs(self.amplitudes)})

    @classmethod
    def from_json(cls, text: str) -> "StateVector":
        data = json.loads(text)
        return cls(int(data["n_qubits"]), _from_pairs(data["amplitudes"]))


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Dense 2^N x 2^N Hermitian matrix (density matrix, observable or variation)."""

    n_qubits: int
    entries: np.ndarray

    def __post_init__(self):
        check_cap(self.n_qubits, OPERATOR_CAP)
        m = np.array(self.entries, dtype=complex)
        d = 2**self.n_qubits
        if m.shape != (d, d):
            raise ValueError(f"expected a {d}x{d} matrix, got shape {m.shape}")
        if m.size and np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise ValueError("matrix is not Hermitian")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @classmethod
    def from_array(cls, entries, symmetrize: bool = False) -> "HermitianOperator":
        m = np.asarray(entries, dtype=complex)
        if symmetrize:
            m = 0.5 * (m + m.conj().T)
        return cls(_qubits_for_dim(m.shape[0]), m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def __add__(self, other: "HermitianOperator") -> "HermitianOperator":
        _same_size(self.n_qubits, other.n_qubits)
        return HermitianOperator(self.n_qubits, self.entries + other.entries)

    def __sub__(self, other: "HermitianOperator") -> "HermitianOperator":
        _same_size(self.n_qubits, other.n_qubits)
        return HermitianOperator(self.n_qubits, self.entries - other.entries)

    def __mul__(self, scalar: float) -> "HermitianOperator":
        if np.iscomplexobj(scalar) and np.imag(scalar) != 0:
            raise TypeError("only real scalars preserve Hermiticity")
        return HermitianOperator(self.n_qubits, float(np.real(scalar)) * self.entries)

    __rmul__ = __mul__

    def to_json(self) -> str:
        return json.dumps({"n_qubits": self.n_qubits, "entries": _complex_pairs(self.entries)})

    @classmethod
    def from_json(cls, text: str) -> "HermitianOperator":
        data = json.loads(text)
        return cls(int(data["n_qubits"]), _from_pairs(data["entries"]))


def _same_size(a: int, b: int) -> None:
    if a != b:
        raise DimensionMismatchError(f"{a}-qubit vs {b}-qubit operands")


def basis_index(bits: Sequence[int]) -> int:
    idx = 0
    for b in bits:
        if b not in (0, 1):
            raise ValueError(f"bits must be 0/1, got {b!r}")
        idx = (idx << 1) | int(b)
    return idx


def make_basis_state(bits: Sequence[int]) -> StateVector:
    """Computational-basis state ``|bits>`` (first bit = qubit 1 = MSB)."""
    bits = list(bits)
    n = len(bits)
    check_cap(n, STATE_CAP)
    amps = np.zeros(2**n, dtype=complex)
    amps[basis_index(bits)] = 1.0
    return StateVector(n, amps)


def haar_vector(n_qubits: int, rng) -> np.ndarray:
    g = as_generator(rng)
    d = 2**n_qubits
    v = g.standard_normal(d) + 1j * g.standard_normal(d)
    return v / np.linalg.norm(v)


def make_haar_state(n_qubits: int, rng) -> StateVector:
    """Haar-random pure state: a normalized complex Gaussian vector.

    ``rng`` is a ``numpy.random.Generator`` (advanced in place) or an int seed.
    """
    check_cap(n_qubits, STATE_CAP)
    return StateVector(n_qubits, haar_vector(n_qubits, rng))


def make_ghz(n_qubits: int, phi: float = 0.0) -> StateVector:
    """(|0...0> + e^{i phi}|1...1>)/sqrt(2)."""
    check_cap(n_qubits, STATE_CAP)
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[0] = 1 / np.sqrt(2)
    amps[-1] += np.exp(1j * phi) / np.sqrt(2)
    return StateVector(n_qubits, amps)


def density_of(state: StateVector) -> HermitianOperator:
    check_cap(state.n_qubits, OPERATOR_CAP)
    a = state.amplitudes
    return HermitianOperator(state.n_qubits, np.outer(a, a.conj()))


def maximally_mixed(n_qubits: int) -> HermitianOperator:
    check_cap(n_qubits, OPERATOR_CAP)
    d = 2**n_qubits
    return HermitianOperator(n_qubits, np.eye(d, dtype=complex) / d)


def random_density_matrix(n_qubits: int, rng, rank: int | None = None) -> HermitianOperator:
    """Ginibre-ensemble density matrix; full rank unless ``rank`` is given."""
    check_cap(n_qubits, OPERATOR_CAP)
    g = as_generator(rng)
    d = 2**n_qubits
    k = d if rank is None else rank
    a = g.standard_normal((d, k)) + 1j * g.standard_normal((d, k))
    rho = a @ a.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return HermitianOperator(n_qubits, rho / np.trace(rho).real)


def random_hermitian(n_qubits: int, rng) -> HermitianOperator:
    """GUE-like random Hermitian matrix with unit-variance entries."""
    check_cap(n_qubits, OPERATOR_CAP)
    g = as_generator(rng)
    d = 2**n_qubits
    a = g.standard_normal((d, d)) + 1j * g.standard_normal((d, d))
    return HermitianOperator(n_qubits, 0.5 * (a + a.conj().T))


def expectation(obs: HermitianOperator, rho: HermitianOperator) -> float:
    """tr[obs rho]."""
    _same_size(obs.n_qubits, rho.n_qubits)
    # tr[AB] = sum_ij A_ij B_ji
    return float(np.real(np.sum(obs.entries * rho.entries.T)))


def is_density_matrix(rho: HermitianOperator, tol: float = 1e-10) -> bool:
    return abs(rho.trace() - 1.0) <= tol and float(rho.eigvalsh()[0]) >= -tol

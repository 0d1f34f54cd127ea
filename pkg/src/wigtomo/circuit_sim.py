"""Density-matrix simulation of the mapping and scanning circuits.

The register layout is fixed as ``[q_0, q_1..q_N, q_1^a..q_N^a]`` (control,
system block, ancilla block), big-endian in the matrix representation: basis
index bits read q_0 first.  Everything is dense; the largest register here is
2N+1 = 5 qubits.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from itertools import product

import numpy as np

from . import spin_ops
from .errors import DomainError

# ---------------------------------------------------------------------------
# Gates and their application
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Gate:
    """A unitary acting on an ordered subset of register qubits."""

    matrix: np.ndarray
    targets: tuple[int, ...]
    name: str = ""

    def __post_init__(self):
        k = len(self.targets)
        if self.matrix.shape != (2**k, 2**k):
            raise DomainError(
                f"gate {self.name!r}: matrix shape {self.matrix.shape} does not "
                f"match {k} target qubits"
            )
        if not spin_ops.is_unitary(self.matrix, tol=1e-10):
            raise DomainError(f"gate {self.name!r} is not unitary")


def embed_gate(gate: Gate, n: int) -> np.ndarray:
    """Full 2^n x 2^n unitary for a gate on an n-qubit register."""
    targets = list(gate.targets)
    if any(t < 0 or t >= n for t in targets):
        raise DomainError(f"gate targets {targets} outside register of {n} qubits")
    if len(set(targets)) != len(targets):
        raise DomainError(f"duplicate gate targets {targets}")
    rest = [q for q in range(n) if q not in targets]
    full = spin_ops.kron_all(gate.matrix, np.eye(2 ** len(rest), dtype=complex))
    # reorder tensor axes from (targets + rest) order back to register order
    src_order = targets + rest
    axes = [src_order.index(q) for q in range(n)]
    t = full.reshape((2,) * (2 * n))
    t = np.transpose(t, axes=axes + [a + n for a in axes])
    return t.reshape(2**n, 2**n)


def apply_gate(rho: np.ndarray, gate: Gate, n: int | None = None) -> np.ndarray:
    """Conjugate a density matrix: ``rho -> G rho G^dag``."""
    if n is None:
        n = spin_ops.num_qubits(rho)
    if rho.shape[0] != 2**n:
        raise DomainError(f"state dim {rho.shape[0]} does not match {n} qubits")
    full = embed_gate(gate, n)
    return full @ rho @ full.conj().T


def apply_circuit(rho: np.ndarray, gates, n: int | None = None) -> np.ndarray:
    for g in gates:
        rho = apply_gate(rho, g, n)
    return rho


# ---------------------------------------------------------------------------
# Circuit building blocks
# ---------------------------------------------------------------------------


def swap_blocks(n: int) -> np.ndarray:
    """Permutation on 2n qubits exchanging the first and last n-qubit blocks."""
    dim = 4**n
    mat = np.zeros((dim, dim), dtype=complex)
    for s in range(2**n):
        for a in range(2**n):
            mat[(a << n) | s, (s << n) | a] = 1.0
    return mat


def cswap(n: int) -> Gate:
    """Controlled block swap on a 2n+1 qubit register.

    Block diagonal ``[identity, swap]``: the system and ancilla blocks are
    exchanged only when the control qubit q_0 is |1>.  Involution.
    """
    dim = 2 * 4**n
    mat = np.eye(dim, dtype=complex)
    mat[4**n :, 4**n :] = swap_blocks(n)
    return Gate(matrix=mat, targets=tuple(range(2 * n + 1)), name="cswap")


def controlled_rotation(g_matrix: np.ndarray) -> Gate:
    """Controlled-G on the ancilla block: applies G to q_1^a..q_N^a iff q_0 = |1>."""
    n = spin_ops.num_qubits(g_matrix)
    dim = 2 * 4**n
    mat = np.eye(dim, dtype=complex)
    mat[4**n :, 4**n :] = spin_ops.kron_all(np.eye(2**n, dtype=complex), g_matrix)
    return Gate(matrix=mat, targets=tuple(range(2 * n + 1)), name="cG")


def mapping_circuit(unitary: np.ndarray, rotation: np.ndarray) -> list[Gate]:
    """Gate list mapping a scaled version of ``unitary`` onto a density matrix.

    CSWAP, the process on the block at ancilla position, CSWAP again, then the
    controlled rotation on the ancilla block.  After these gates the
    off-diagonal control blocks hold ``eps U`` with
    ``eps = tr(U^dag G)/2^n`` (for maximally mixed block inputs).
    """
    if unitary.shape != rotation.shape:
        raise DomainError(
            f"dimension mismatch: {unitary.shape} vs {rotation.shape}"
        )
    n = spin_ops.num_qubits(unitary)
    ancilla = tuple(range(n + 1, 2 * n + 1))
    return [
        cswap(n),
        Gate(matrix=unitary, targets=ancilla, name="process"),
        cswap(n),
        controlled_rotation(rotation),
    ]


def partial_trace(rho: np.ndarray, keep, n: int | None = None) -> np.ndarray:
    """Trace out every qubit not in ``keep`` (register indices, order kept)."""
    if n is None:
        n = spin_ops.num_qubits(rho)
    keep = list(keep)
    if not keep or len(keep) > n or sorted(set(keep)) != sorted(keep):
        raise DomainError(f"invalid keep set {keep} for {n} qubits")
    if any(q < 0 or q >= n for q in keep):
        raise DomainError(f"keep set {keep} outside register of {n} qubits")
    t = rho.reshape((2,) * (2 * n))
    traced = [q for q in range(n) if q not in keep]
    for offset, q in enumerate(sorted(traced)):
        ax = q - offset
        t = np.trace(t, axis1=ax, axis2=ax + t.ndim // 2)
    d = 2 ** len(keep)
    return t.reshape(d, d)


# ---------------------------------------------------------------------------
# States and expectation values
# ---------------------------------------------------------------------------


def basis_state(bits: str) -> np.ndarray:
    """Pure computational-basis density matrix from a bit string like '010'."""
    n = len(bits)
    idx = int(bits, 2)
    rho = np.zeros((2**n, 2**n), dtype=complex)
    rho[idx, idx] = 1.0
    return rho


def plus_state() -> np.ndarray:
    return np.full((2, 2), 0.5, dtype=complex)


def mapping_input_state(n: int) -> np.ndarray:
    """Control in |+>, system and ancilla blocks maximally mixed."""
    return spin_ops.kron_all(plus_state(), np.eye(4**n, dtype=complex) / 4**n)


def expectation(rho: np.ndarray, obs: np.ndarray) -> float:
    """``tr(obs rho)`` for a Hermitian observable; the imaginary residue of the
    trace is checked against rounding noise and discarded."""
    if not spin_ops.is_hermitian(obs, tol=1e-12):
        raise DomainError("observable must be Hermitian")
    val = complex(np.trace(obs @ rho))
    if abs(val.imag) > 1e-9:
        raise DomainError(f"expectation has non-negligible imaginary part {val.imag}")
    return float(val.real)


def preparation_family(n: int) -> list[str]:
    """All computational-basis preparations of the 2n non-control qubits."""
    return ["".join(bits) for bits in product("01", repeat=2 * n)]


def prepared_state(bits: str) -> np.ndarray:
    """Control in |+> and the remaining qubits in the given basis state."""
    return spin_ops.kron_all(plus_state(), basis_state(bits))


def temporal_average(gates, obs: np.ndarray, n: int, family=None) -> float:
    """Average expectation over all basis-state preparations.

    Emulates running the circuit on maximally mixed system/ancilla inputs by
    repeating it for every computational-basis preparation of the non-control
    qubits and averaging the outcomes.
    """
    expected = preparation_family(n)
    if family is None:
        family = expected
    if sorted(family) != sorted(expected):
        raise DomainError(
            f"preparation family must cover all {len(expected)} basis states"
        )
    total = 0.0
    for bits in family:
        rho = apply_circuit(prepared_state(bits), gates, 2 * n + 1)
        total += expectation(rho, obs)
    return total / len(family)


# ---------------------------------------------------------------------------
# Shot sampling
# ---------------------------------------------------------------------------

_MASK64 = (1 << 64) - 1


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_seed(seed: int, *parts) -> int:
    """Mix a base seed with arbitrary keys into a new 64-bit seed.

    Strings are folded through an 8-byte blake2b digest so the result does not
    depend on interpreter hash randomization.
    """
    h = seed & _MASK64
    for part in parts:
        if isinstance(part, str):
            v = int.from_bytes(
                hashlib.blake2b(part.encode(), digest_size=8).digest(), "big"
            )
        else:
            v = int(part) & _MASK64
        h = _splitmix64(h ^ v)
    return h


@dataclass(frozen=True)
class ShotEstimator:
    """Binomial sampler for a +-1-valued observable; deterministic per seed."""

    seed: int
    shots: int

    def __post_init__(self):
        if self.shots < 1:
            raise DomainError("shot count must be >= 1")


def binomial_estimate(p_true: float, shots: int, rng) -> float:
    """One finite-shot estimate: ``2k/shots - 1`` with
    ``k ~ Binomial(shots, (1 + p)/2)`` drawn from the supplied generator."""
    p = min(max((1.0 + p_true) / 2.0, 0.0), 1.0)
    k = rng.binomial(shots, p)
    return 2.0 * k / shots - 1.0


def sample_shots(p_true: float, est: ShotEstimator, rng=None) -> float:
    """Finite-shot estimate of an expectation value in [-1, 1].

    A fresh generator is seeded from ``est.seed`` unless one is passed in, so
    identical (seed, inputs) produce identical outputs.
    """
    if abs(p_true) > 1.0 + 1e-9:
        raise DomainError(f"expectation {p_true} outside [-1, 1]")
    if rng is None:
        rng = np.random.default_rng(est.seed)
    return binomial_estimate(p_true, est.shots, rng)

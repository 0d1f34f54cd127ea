"""Operator algebra for small qubit registers.

Pauli strings, irreducible spherical tensor operators, collective rotations,
and the quaternion parameterization of single-qubit special unitaries.  All
matrices are dense complex numpy arrays; dimensions stay at most 32 so nothing
here tries to be clever about sparsity.

Conventions fixed once and used everywhere:

* Pauli-string ordering is lexicographic in (x, y, z, 1) per qubit with the
  identity last, so the single-qubit basis is (sigma_x, sigma_y, sigma_z, 1).
* A single-qubit special unitary with quaternion components (A, B, C, D) is
  ``[[D+iC, B+iA], [-B+iA, D-iC]]``.
* Rotations are ``R(alpha, beta) = exp(-i alpha Fz) exp(-i beta Fy)`` with the
  collective spin operators ``Fa = (1/2) sum_k sigma_ka``.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import DomainError, UnsupportedError

SQRT2 = math.sqrt(2.0)

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

#: Single-qubit Pauli basis in the canonical (x, y, z, 1) order.
PAULI_AXES = "xyzi"
PAULI_1Q = {
    "x": SIGMA_X,
    "y": SIGMA_Y,
    "z": SIGMA_Z,
    "i": IDENTITY_2,
}


def kron_all(*mats: np.ndarray) -> np.ndarray:
    out = np.array([[1.0 + 0.0j]])
    for m in mats:
        out = np.kron(out, m)
    return out


def num_qubits(matrix: np.ndarray) -> int:
    """Number of qubits for a square matrix of power-of-two dimension."""
    dim = matrix.shape[0]
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {matrix.shape}")
    n = dim.bit_length() - 1
    if dim < 2 or 2**n != dim:
        raise DomainError(f"dimension {dim} is not a power of two >= 2")
    return n


def is_unitary(matrix: np.ndarray, tol: float = 1e-12) -> bool:
    d = matrix.shape[0]
    return bool(np.max(np.abs(matrix @ matrix.conj().T - np.eye(d))) <= tol)


def is_hermitian(matrix: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(matrix - matrix.conj().T)) <= tol)


def pauli_labels(n: int) -> list[str]:
    """All length-n Pauli string labels in canonical order, e.g. 'xz'."""
    return ["".join(chars) for chars in product(PAULI_AXES, repeat=n)]


def pauli_string(label: str) -> np.ndarray:
    """Tensor product of single-qubit Paulis named by ``label``."""
    try:
        return kron_all(*(PAULI_1Q[ch] for ch in label))
    except KeyError as exc:
        raise DomainError(f"unknown Pauli axis in label {label!r}") from exc


def pauli_basis(n: int) -> list[np.ndarray]:
    return [pauli_string(lbl) for lbl in pauli_labels(n)]


def pauli_coefficients(matrix: np.ndarray) -> np.ndarray:
    """Expansion coefficients c_k with ``matrix = sum_k c_k sigma_k``.

    Uses ``c_k = tr(sigma_k matrix) / 2**n``; for a unitary input the
    coefficient vector has unit Euclidean norm.
    """
    n = num_qubits(matrix)
    return np.array([np.trace(p @ matrix) / 2**n for p in pauli_basis(n)])


def pauli_reconstruct(coeffs: np.ndarray, n: int) -> np.ndarray:
    basis = pauli_basis(n)
    if len(coeffs) != len(basis):
        raise DomainError(f"expected {len(basis)} coefficients, got {len(coeffs)}")
    out = np.zeros((2**n, 2**n), dtype=complex)
    for c, p in zip(coeffs, basis):
        out += c * p
    return out


def embed_single(op: np.ndarray, pos: int, n: int) -> np.ndarray:
    """Single-qubit operator at position ``pos`` of an n-qubit register."""
    mats = [IDENTITY_2] * n
    mats[pos] = op
    return kron_all(*mats)


def collective_spin(axis: str, n: int) -> np.ndarray:
    """``F_axis = (1/2) sum_k sigma_k,axis`` on n qubits."""
    sigma = PAULI_1Q[axis]
    out = np.zeros((2**n, 2**n), dtype=complex)
    for k in range(n):
        out += 0.5 * embed_single(sigma, k, n)
    return out


# ---------------------------------------------------------------------------
# Rotations
# ---------------------------------------------------------------------------


def rz(angle: float) -> np.ndarray:
    return np.array(
        [[cmath.exp(-0.5j * angle), 0.0], [0.0, cmath.exp(0.5j * angle)]]
    )


def ry(angle: float) -> np.ndarray:
    c, s = math.cos(angle / 2.0), math.sin(angle / 2.0)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rotation_operator(n: int, alpha: float, beta: float) -> np.ndarray:
    """Collective rotation ``exp(-i alpha Fz) exp(-i beta Fy)`` on n qubits.

    Because Fz and Fy are sums of local terms this factors into the n-fold
    tensor power of the single-qubit rotation.
    """
    r1 = rz(alpha) @ ry(beta)
    return kron_all(*([r1] * n))


def u3(theta: float, phi: float, lam: float) -> np.ndarray:
    """General single-qubit rotation ``RZ(phi) RY(theta) RZ(lam)``, written in
    the phase convention whose top-left entry is real."""
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    return np.array(
        [
            [c, -cmath.exp(1j * lam) * s],
            [cmath.exp(1j * phi) * s, cmath.exp(1j * (lam + phi)) * c],
        ]
    )


def axis_angle_gate(gamma: float, axis) -> np.ndarray:
    """Special unitary ``cos(g/2) 1 - i sin(g/2) (n . sigma)`` for unit axis n."""
    nx, ny, nz = np.asarray(axis, dtype=float)
    norm = math.sqrt(nx * nx + ny * ny + nz * nz)
    if norm == 0.0:
        raise DomainError("rotation axis must be nonzero")
    nx, ny, nz = nx / norm, ny / norm, nz / norm
    half = gamma / 2.0
    return math.cos(half) * IDENTITY_2 - 1j * math.sin(half) * (
        nx * SIGMA_X + ny * SIGMA_Y + nz * SIGMA_Z
    )


# ---------------------------------------------------------------------------
# Spherical tensor operators
# ---------------------------------------------------------------------------

# Admissible (label, rank) pairs and the axial (m = 0) tensors for one- and
# two-qubit systems.  Labels name the qubit subset the component describes:
# "" is the identity part, "1"/"2" the linear parts, "12" the bilinear part.


def _axial_table(n: int) -> dict[tuple[str, int], np.ndarray]:
    if n == 1:
        return {
            ("", 0): IDENTITY_2 / SQRT2,
            ("1", 1): SIGMA_Z / SQRT2,
        }
    if n == 2:
        xx = kron_all(SIGMA_X, SIGMA_X)
        yy = kron_all(SIGMA_Y, SIGMA_Y)
        zz = kron_all(SIGMA_Z, SIGMA_Z)
        xy = kron_all(SIGMA_X, SIGMA_Y)
        yx = kron_all(SIGMA_Y, SIGMA_X)
        return {
            ("", 0): np.eye(4, dtype=complex) / 2.0,
            ("1", 1): kron_all(SIGMA_Z, IDENTITY_2) / 2.0,
            ("2", 1): kron_all(IDENTITY_2, SIGMA_Z) / 2.0,
            ("12", 0): (xx + yy + zz) / (2.0 * math.sqrt(3.0)),
            ("12", 1): (xy - yx) / (2.0 * SQRT2),
            ("12", 2): -(xx + yy - 2.0 * zz) / (2.0 * math.sqrt(6.0)),
        }
    raise UnsupportedError(
        f"axial tensors are tabulated for n <= 2 qubits, requested n={n}"
    )


def admissible_tensor_set(n: int) -> dict[str, tuple[int, ...]]:
    """Map label -> admissible ranks j for an n-qubit system."""
    table: dict[str, list[int]] = {}
    for (label, j) in _axial_table(n):
        table.setdefault(label, []).append(j)
    return {label: tuple(sorted(js)) for label, js in table.items()}


@dataclass(frozen=True)
class TensorIndex:
    """Index (label, rank j, order m) of a spherical tensor operator."""

    label: str
    j: int
    m: int = 0

    def __post_init__(self):
        if abs(self.m) > self.j:
            raise DomainError(f"|m|={abs(self.m)} exceeds rank j={self.j}")


def axial_tensor(n: int, idx: TensorIndex) -> np.ndarray:
    """Axial (m = 0) tensor operator for the given index.

    Hermitian and normalized to unit Hilbert-Schmidt norm; distinct indices
    are mutually orthogonal under tr(A^dag B).
    """
    if idx.m != 0:
        raise DomainError("axial tensors have order m = 0")
    table = _axial_table(n)
    try:
        return table[(idx.label, idx.j)].copy()
    except KeyError as exc:
        raise DomainError(
            f"(label={idx.label!r}, j={idx.j}) is not admissible for n={n}"
        ) from exc


def tensor_multiplet(n: int, label: str, j: int) -> dict[int, np.ndarray]:
    """Full multiplet T_jm, m = -j..j, generated from the axial tensor.

    Raising and lowering use ``[F_pm, T_jm] = sqrt(j(j+1) - m(m pm 1)) T_j,m pm 1``
    which keeps the phases consistent with the Condon-Shortley convention of
    the matching spherical harmonics.
    """
    t0 = axial_tensor(n, TensorIndex(label, j))
    f_plus = collective_spin("x", n) + 1j * collective_spin("y", n)
    f_minus = collective_spin("x", n) - 1j * collective_spin("y", n)
    out = {0: t0}
    for m in range(j):
        norm = math.sqrt(j * (j + 1) - m * (m + 1))
        out[m + 1] = (f_plus @ out[m] - out[m] @ f_plus) / norm
    for m in range(0, -j, -1):
        norm = math.sqrt(j * (j + 1) - m * (m - 1))
        out[m - 1] = (f_minus @ out[m] - out[m] @ f_minus) / norm
    return out


def tensor_coefficients(matrix: np.ndarray) -> dict[TensorIndex, complex]:
    """Decompose a matrix over the spherical tensor basis.

    Returns ``{TensorIndex(label, j, m): tr(T_jm^dag matrix)}`` for every
    admissible index of the register size.
    """
    n = num_qubits(matrix)
    coeffs: dict[TensorIndex, complex] = {}
    for label, ranks in admissible_tensor_set(n).items():
        for j in ranks:
            multiplet = tensor_multiplet(n, label, j)
            for m, t in multiplet.items():
                coeffs[TensorIndex(label, j, m)] = complex(
                    np.trace(t.conj().T @ matrix)
                )
    return coeffs


# ---------------------------------------------------------------------------
# Quaternions
# ---------------------------------------------------------------------------

# Preference order used to break magnitude ties when fixing the overall sign.
_CANONICAL_PREFERENCE = (3, 0, 1, 2)  # components in order D, A, B, C
_TIE_TOL = 1e-9


@dataclass(frozen=True)
class Quaternion:
    """Real 4-vector (A, B, C, D) parameterizing a single-qubit special unitary."""

    a: float
    b: float
    c: float
    d: float

    @classmethod
    def from_array(cls, arr) -> "Quaternion":
        a, b, c, d = (float(v) for v in arr)
        return cls(a, b, c, d)

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, self.d], dtype=float)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.as_array()))

    def normalized(self) -> "Quaternion":
        n = self.norm
        if n == 0.0:
            raise DomainError("cannot normalize a zero quaternion")
        return Quaternion.from_array(self.as_array() / n)

    def canonical(self) -> "Quaternion":
        """Normalize and fix the overall sign.

        The sign is flipped so the largest-magnitude component is positive;
        exact magnitude ties are broken in the order D, A, B, C.
        """
        arr = self.normalized().as_array()
        mags = np.abs(arr)
        top = mags.max()
        ref = next(i for i in _CANONICAL_PREFERENCE if mags[i] >= top - _TIE_TOL)
        if arr[ref] < 0.0:
            arr = -arr
        return Quaternion.from_array(arr)


def quaternion_to_unitary(q: Quaternion) -> np.ndarray:
    """Special unitary ``[[D+iC, B+iA], [-B+iA, D-iC]]`` for a unit quaternion.

    A non-normalized input is normalized first and reported via a warning.
    """
    if abs(q.norm - 1.0) > 1e-10:
        warnings.warn(
            f"quaternion norm {q.norm:.6g} != 1, normalizing", stacklevel=2
        )
        q = q.normalized()
    a, b, c, d = q.a, q.b, q.c, q.d
    return np.array(
        [[d + 1j * c, b + 1j * a], [-b + 1j * a, d - 1j * c]]
    )


def unitary_to_quaternion(unitary: np.ndarray, canonical: bool = True) -> Quaternion:
    """Quaternion components of a 2x2 unitary.

    The global phase is removed by dividing by the principal branch of
    ``sqrt(det U)``, which maps the input to a special unitary before the
    components are read off.
    """
    if unitary.shape != (2, 2):
        raise DomainError(f"expected a 2x2 matrix, got shape {unitary.shape}")
    det = complex(unitary[0, 0] * unitary[1, 1] - unitary[0, 1] * unitary[1, 0])
    if abs(abs(det) - 1.0) > 1e-8:
        raise DomainError(f"matrix is not unitary, |det| = {abs(det):.6g}")
    v = unitary / cmath.sqrt(det)
    q = Quaternion(
        a=float((v[0, 1] + v[1, 0]).imag / 2.0),
        b=float((v[0, 1] - v[1, 0]).real / 2.0),
        c=float((v[0, 0] - v[1, 1]).imag / 2.0),
        d=float((v[0, 0] + v[1, 1]).real / 2.0),
    )
    return q.canonical() if canonical else q


def quaternion_axis_angle(q: Quaternion) -> tuple[float, np.ndarray]:
    """Rotation angle gamma and unit axis of the unitary encoded by ``q``.

    Inverse of ``axis_angle_gate`` up to the sign ambiguity (gamma, n) vs
    (-gamma, -n); gamma is returned in [0, 2 pi).
    """
    q = q.normalized()
    gamma = 2.0 * math.acos(max(-1.0, min(1.0, q.d)))
    s = math.sin(gamma / 2.0)
    if abs(s) < 1e-15:
        return gamma, np.array([0.0, 0.0, 1.0])
    axis = -np.array([q.a, q.b, q.c]) / s
    return gamma, axis


# ---------------------------------------------------------------------------
# Overlaps and distances
# ---------------------------------------------------------------------------


def scaling_factor(unitary: np.ndarray, rotation: np.ndarray) -> complex:
    """Overlap ``tr(U^dag G) / 2^n`` by which U is attenuated in the mapping."""
    if unitary.shape != rotation.shape:
        raise DomainError(
            f"dimension mismatch: {unitary.shape} vs {rotation.shape}"
        )
    n = num_qubits(unitary)
    return complex(np.trace(unitary.conj().T @ rotation) / 2**n)


def closest_unitary(matrix: np.ndarray) -> np.ndarray:
    """Unitary factor of the polar decomposition, the Frobenius-closest
    unitary to ``matrix``."""
    w, _, vh = np.linalg.svd(matrix)
    return w @ vh


# ---------------------------------------------------------------------------
# Named gates
# ---------------------------------------------------------------------------

# Specific-unitary representatives chosen so each gate's quaternion is already
# in canonical sign form.
NAMED_GATES = {
    "I": IDENTITY_2.copy(),
    "X": 1j * SIGMA_X,
    "Y": 1j * SIGMA_Y,
    "Z": 1j * SIGMA_Z,
    "H": 1j * (SIGMA_X + SIGMA_Z) / SQRT2,
    "S": (IDENTITY_2 - 1j * SIGMA_Z) / SQRT2,
    "SQRTNOT": (IDENTITY_2 - 1j * SIGMA_X) / SQRT2,
    "CNOT": np.array(
        [
            [1, 0, 0, 0],
            [0, 1, 0, 0],
            [0, 0, 0, 1],
            [0, 0, 1, 0],
        ],
        dtype=complex,
    ),
}
_GATE_ALIASES = {"NOT": "X", "HADAMARD": "H", "SQRT_NOT": "SQRTNOT", "SX": "SQRTNOT", "ID": "I"}


def named_gate(name: str) -> np.ndarray:
    key = name.strip().upper()
    key = _GATE_ALIASES.get(key, key)
    try:
        return NAMED_GATES[key].copy()
    except KeyError as exc:
        raise DomainError(
            f"unknown gate {name!r}; known: {sorted(NAMED_GATES)}"
        ) from exc

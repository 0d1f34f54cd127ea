"""Spherical droplet functions and their operator transforms.

A droplet is a set of complex-valued functions sampled on a quadrature grid
on the unit sphere, one sample array per label (qubit subset).  Operators map
to droplets by taking overlaps with rotated axial tensor operators, and back
by spherical-harmonic analysis of the samples.

The scalar product between droplets is normalized so that the droplet of any
n-qubit *unitary* has unit norm, i.e. ``<f_A|f_B> = tr(A^dag B) / 2^n``.  That
convention is what makes the diagonal of the correlation matrix equal to the
squared weights of scaled droplets, which the reconstruction relies on.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import sph_harm_y

from . import spin_ops
from .errors import DomainError, GridMismatchError

FOUR_PI = 4.0 * math.pi

# ---------------------------------------------------------------------------
# Lebedev quadrature grids
# ---------------------------------------------------------------------------

SUPPORTED_ORDERS = (6, 26, 50)


def _axis_points() -> np.ndarray:
    pts = []
    for axis in range(3):
        for sign in (1.0, -1.0):
            v = [0.0, 0.0, 0.0]
            v[axis] = sign
            pts.append(v)
    return np.array(pts)


def _edge_points() -> np.ndarray:
    a = 1.0 / math.sqrt(2.0)
    pts = []
    for i in range(3):
        for j in range(i + 1, 3):
            for si in (1.0, -1.0):
                for sj in (1.0, -1.0):
                    v = [0.0, 0.0, 0.0]
                    v[i], v[j] = si * a, sj * a
                    pts.append(v)
    return np.array(pts)


def _corner_points() -> np.ndarray:
    a = 1.0 / math.sqrt(3.0)
    return np.array(
        [[sx * a, sy * a, sz * a] for sx in (1, -1) for sy in (1, -1) for sz in (1, -1)]
    )


def _llm_points(l: float) -> np.ndarray:
    m = math.sqrt(1.0 - 2.0 * l * l)
    pts = []
    for pos in range(3):  # position of the m component
        for s0 in (1.0, -1.0):
            for s1 in (1.0, -1.0):
                for s2 in (1.0, -1.0):
                    v = [s0 * l, s1 * l, s2 * l]
                    v[pos] = [s0, s1, s2][pos] * m
                    pts.append(v)
    return np.array(pts)


# Standard Lebedev node classes and weights (weights sum to exactly 1).
_LEBEDEV_BUILDERS = {
    6: ((_axis_points, 1.0 / 6.0),),
    26: (
        (_axis_points, 1.0 / 21.0),
        (_edge_points, 4.0 / 105.0),
        (_corner_points, 9.0 / 280.0),
    ),
    50: (
        (_axis_points, 4.0 / 315.0),
        (_edge_points, 64.0 / 2835.0),
        (_corner_points, 27.0 / 1280.0),
        (lambda: _llm_points(1.0 / math.sqrt(11.0)), 14641.0 / 725760.0),
    ),
}


@dataclass(eq=False)
class SphereGrid:
    """Quadrature node set {(theta_i, phi_i, w_i)} with weights summing to 1."""

    order: int
    theta: np.ndarray
    phi: np.ndarray
    weight: np.ndarray

    def __post_init__(self):
        if not (len(self.theta) == len(self.phi) == len(self.weight)):
            raise DomainError("grid arrays must have equal length")
        if np.any(self.weight <= 0.0):
            raise DomainError("grid weights must be positive")
        if abs(self.weight.sum() - 1.0) > 1e-12:
            raise DomainError("grid weights must sum to 1")

    def __len__(self) -> int:
        return len(self.theta)

    def unit_vectors(self) -> np.ndarray:
        st = np.sin(self.theta)
        return np.column_stack(
            (st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta))
        )


def lebedev_grid(order: int) -> SphereGrid:
    """Embedded standard Lebedev grid of the given node count."""
    if order not in _LEBEDEV_BUILDERS:
        raise DomainError(
            f"unsupported Lebedev order {order}; supported: {SUPPORTED_ORDERS}"
        )
    points, weights = [], []
    for builder, w in _LEBEDEV_BUILDERS[order]:
        pts = builder()
        points.append(pts)
        weights.append(np.full(len(pts), w))
    xyz = np.vstack(points)
    w = np.concatenate(weights)
    theta = np.arccos(np.clip(xyz[:, 2], -1.0, 1.0))
    phi = np.mod(np.arctan2(xyz[:, 1], xyz[:, 0]), 2.0 * math.pi)
    return SphereGrid(order=order, theta=theta, phi=phi, weight=w)


def grids_equal(a: SphereGrid, b: SphereGrid, tol: float = 1e-12) -> bool:
    return (
        len(a) == len(b)
        and np.max(np.abs(a.theta - b.theta)) <= tol
        and np.max(np.abs(a.phi - b.phi)) <= tol
        and np.max(np.abs(a.weight - b.weight)) <= tol
    )


# ---------------------------------------------------------------------------
# Spherical harmonics
# ---------------------------------------------------------------------------


def spherical_harmonic(j: int, m: int, theta, phi):
    """Orthonormal complex spherical harmonic Y_jm with Condon-Shortley phase."""
    if j < 0 or abs(m) > j:
        raise DomainError(f"invalid harmonic index (j={j}, m={m})")
    return sph_harm_y(j, m, theta, phi)


# ---------------------------------------------------------------------------
# Droplets
# ---------------------------------------------------------------------------


def _label_order(label: str) -> tuple:
    return (len(label), label)


@dataclass
class Droplet:
    """Per-label complex samples over a shared sphere grid.

    ``dim`` records the operator dimension (2^n) the droplet represents; the
    scalar product divides by it so unitaries have unit-norm droplets.
    """

    grid: SphereGrid
    samples: dict[str, np.ndarray]
    dim: int = 2
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for label, arr in self.samples.items():
            if len(arr) != len(self.grid):
                raise DomainError(
                    f"label {label!r}: {len(arr)} samples for {len(self.grid)} nodes"
                )

    @property
    def labels(self) -> list[str]:
        return sorted(self.samples, key=_label_order)

    def copy(self) -> "Droplet":
        return Droplet(
            grid=self.grid,
            samples={k: v.copy() for k, v in self.samples.items()},
            dim=self.dim,
            meta=dict(self.meta),
        )


def _batched_rotations(n: int, grid: SphereGrid) -> np.ndarray:
    """Rotation operators R(alpha=phi_i, beta=theta_i) for every node."""
    half_t = grid.theta / 2.0
    half_p = grid.phi / 2.0
    c, s = np.cos(half_t), np.sin(half_t)
    em, ep = np.exp(-1j * half_p), np.exp(1j * half_p)
    r1 = np.empty((len(grid), 2, 2), dtype=complex)
    r1[:, 0, 0] = em * c
    r1[:, 0, 1] = -em * s
    r1[:, 1, 0] = ep * s
    r1[:, 1, 1] = ep * c
    out = r1
    for _ in range(n - 1):
        out = np.einsum("nab,ncd->nacbd", out, r1).reshape(
            len(grid), out.shape[1] * 2, out.shape[2] * 2
        )
    return out


def operator_to_droplet(matrix: np.ndarray, grid: SphereGrid) -> Droplet:
    """Sample the droplet of an operator on a sphere grid.

    For each label and admissible rank j the node value is
    ``s_j tr(T_j,rot matrix)`` with ``T_j,rot = R T_j0 R^dag`` rotated to the
    node direction and ``s_j = sqrt((2j+1)/4pi)``; ranks are summed per label.
    """
    n = spin_ops.num_qubits(matrix)
    rots = _batched_rotations(n, grid)
    # tr(R T R^dag A) = tr(T R^dag A R); batch the conjugated operator once
    conj = np.einsum("nba,bc,ncd->nad", rots.conj(), matrix, rots)
    samples: dict[str, np.ndarray] = {}
    for label, ranks in spin_ops.admissible_tensor_set(n).items():
        total = np.zeros(len(grid), dtype=complex)
        for j in ranks:
            s_j = math.sqrt((2 * j + 1) / FOUR_PI)
            t0 = spin_ops.axial_tensor(n, spin_ops.TensorIndex(label, j))
            total += s_j * np.einsum("ab,nba->n", t0, conj)
        samples[label] = total
    return Droplet(grid=grid, samples=samples, dim=matrix.shape[0])


def harmonic_coefficients(f: Droplet) -> dict[tuple[str, int, int], complex]:
    """Per-label expansion coefficients ``c_jm`` of the droplet samples.

    ``c_jm = 4 pi sum_i w_i conj(Y_jm)(node_i) f(node_i)`` over the admissible
    ranks of each label; exact whenever the grid integrates the occurring
    harmonic products exactly.
    """
    n = f.dim.bit_length() - 1
    admissible = spin_ops.admissible_tensor_set(n)
    coeffs: dict[tuple[str, int, int], complex] = {}
    for label, values in f.samples.items():
        if label not in admissible:
            raise DomainError(f"label {label!r} not admissible for dim {f.dim}")
        for j in admissible[label]:
            for m in range(-j, j + 1):
                y = spherical_harmonic(j, m, f.grid.theta, f.grid.phi)
                coeffs[(label, j, m)] = complex(
                    FOUR_PI * np.sum(f.grid.weight * np.conj(y) * values)
                )
    return coeffs


def droplet_to_operator(f: Droplet) -> np.ndarray:
    """Reassemble the operator from droplet samples by harmonic analysis;
    inverse of :func:`operator_to_droplet` on its image."""
    n = f.dim.bit_length() - 1
    coeffs = harmonic_coefficients(f)
    out = np.zeros((f.dim, f.dim), dtype=complex)
    multiplets = {
        (label, j): spin_ops.tensor_multiplet(n, label, j)
        for label, ranks in spin_ops.admissible_tensor_set(n).items()
        for j in ranks
    }
    for (label, j, m), c in coeffs.items():
        out += c * multiplets[(label, j)][m]
    return out


def _check_compatible(f: Droplet, g: Droplet):
    if not grids_equal(f.grid, g.grid):
        raise GridMismatchError("droplets live on different grids")
    if f.labels != g.labels:
        raise GridMismatchError(f"label sets differ: {f.labels} vs {g.labels}")
    if f.dim != g.dim:
        raise GridMismatchError(f"operator dimensions differ: {f.dim} vs {g.dim}")


def scalar_product(f: Droplet, g: Droplet) -> complex:
    """Discretized scalar product ``sum_l 4pi sum_i w_i f*(i) g(i) / dim``."""
    _check_compatible(f, g)
    acc = 0.0j
    for label in f.labels:
        acc += np.sum(f.grid.weight * np.conj(f.samples[label]) * g.samples[label])
    return complex(acc * FOUR_PI / f.dim)


def droplet_norm(f: Droplet) -> float:
    return math.sqrt(max(scalar_product(f, f).real, 0.0))


@dataclass
class CorrelationMatrix:
    """Real Gram matrix of scaled droplets plus an imaginary-residue noise floor."""

    m: np.ndarray
    noise_floor: float = 0.0


def correlation_matrix(droplets) -> CorrelationMatrix:
    """Gram matrix ``M[p][q] = Re<f_p|f_q>`` of the scaled droplets.

    The entries of an ideal set are real; the mean magnitude of the discarded
    imaginary parts is kept as an estimate of the noise floor.
    """
    k = len(droplets)
    m = np.zeros((k, k))
    residues = []
    for p in range(k):
        for q in range(p, k):
            v = scalar_product(droplets[p], droplets[q])
            m[p, q] = m[q, p] = v.real
            if q > p:
                residues.append(abs(v.imag))
    floor = float(np.mean(residues)) if residues else 0.0
    return CorrelationMatrix(m=m, noise_floor=floor)


def combine(droplets, weights) -> Droplet:
    """Pointwise weighted sum of droplets sharing a grid and label set."""
    if len(droplets) != len(weights):
        raise DomainError(
            f"{len(droplets)} droplets but {len(weights)} weights"
        )
    if not droplets:
        raise DomainError("need at least one droplet")
    first = droplets[0]
    for other in droplets[1:]:
        _check_compatible(first, other)
    samples = {
        label: sum(
            w * f.samples[label] for w, f in zip(weights, droplets)
        )
        for label in first.labels
    }
    return Droplet(grid=first.grid, samples=samples, dim=first.dim)


def fidelity(u: np.ndarray, v: np.ndarray) -> float:
    """Process fidelity ``|tr(U V^dag)| / d``, invariant under global phase."""
    if u.shape != v.shape:
        raise DomainError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return float(abs(np.trace(u @ v.conj().T)) / u.shape[0])


def phase_adjust(obj, k: int):
    """Multiply by i for rotation indices k in {1, 2, 3}; identity for k = 4.

    Keeps droplet colors consistent across the four controlled rotations.
    Accepts a droplet or a plain matrix.
    """
    if k not in (1, 2, 3, 4):
        raise DomainError(f"rotation index k must be in 1..4, got {k}")
    factor = 1j if k <= 3 else 1.0
    if isinstance(obj, Droplet):
        out = obj.copy()
        for label in out.samples:
            out.samples[label] = factor * out.samples[label]
        return out
    return factor * np.asarray(obj)


# ---------------------------------------------------------------------------
# File format
# ---------------------------------------------------------------------------

_EMPTY_LABEL_KEY = "empty"


def _label_to_key(label: str) -> str:
    return _EMPTY_LABEL_KEY if label == "" else label


def _key_to_label(key: str) -> str:
    return "" if key == _EMPTY_LABEL_KEY else key


def droplet_to_dict(f: Droplet) -> dict:
    return {
        "grid": {
            "order": f.grid.order,
            "nodes": [
                [float(t), float(p), float(w)]
                for t, p, w in zip(f.grid.theta, f.grid.phi, f.grid.weight)
            ],
        },
        "labels": {
            _label_to_key(label): [[float(v.real), float(v.imag)] for v in arr]
            for label, arr in sorted(f.samples.items(), key=lambda kv: _label_order(kv[0]))
        },
        "meta": {**f.meta, "dim": f.dim},
    }


def droplet_from_dict(data: dict) -> Droplet:
    nodes = np.array(data["grid"]["nodes"], dtype=float)
    grid = SphereGrid(
        order=int(data["grid"]["order"]),
        theta=nodes[:, 0],
        phi=nodes[:, 1],
        weight=nodes[:, 2],
    )
    samples = {}
    for key, pairs in data["labels"].items():
        arr = np.array(pairs, dtype=float)
        samples[_key_to_label(key)] = arr[:, 0] + 1j * arr[:, 1]
    meta = dict(data.get("meta", {}))
    dim = int(meta.pop("dim", 2))
    return Droplet(grid=grid, samples=samples, dim=dim, meta=meta)


def save_droplet(f: Droplet, path):
    with open(path, "w") as fh:
        json.dump(droplet_to_dict(f), fh, indent=1)
        fh.write("\n")


def load_droplet(path) -> Droplet:
    with open(path) as fh:
        return droplet_from_dict(json.load(fh))

"""Reconstruction of an unknown unitary from scaled droplets.

Three estimators are provided on top of the correlation-matrix zero-order
guess: the matched-filter iteration (weight, combine, re-estimate), a
quaternion-parameterized cost minimization, and a Pauli-coefficient cost that
scales to multi-qubit inputs.  An adaptive single-rotation variant re-scans
with its own latest estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize as sp_optimize

from . import circuit_sim as cs
from . import spin_ops
from .droplet import (
    CorrelationMatrix,
    combine,
    correlation_matrix,
    droplet_norm,
    droplet_to_operator,
    fidelity,
)
from .errors import DegenerateInputError, DomainError
from .spin_ops import Quaternion
from .tomography import ScanConfig, custom_rotation, scan

_DEGENERATE_NORM = 1e-8


@dataclass(frozen=True)
class CostParams:
    """Termination and differentiation knobs shared by the estimators."""

    tolerance: float = 1e-4
    max_iterations: int = 50
    finite_difference_step: float = 1e-6

    def __post_init__(self):
        if self.tolerance <= 0.0:
            raise DomainError("tolerance must be positive")
        if self.max_iterations < 1:
            raise DomainError("max_iterations must be >= 1")


@dataclass
class ReconstructionReport:
    """Estimate plus per-iteration traces.

    ``quaternion_trace``/``coefficient_trace`` and the cost/fidelity traces
    have length ``iterations + 1`` (initial point included); the fidelity
    trace is only present when a reference gate was supplied.
    """

    method: str
    iterations: int
    quaternion: Quaternion | None = None
    coefficients: np.ndarray | None = None
    quaternion_trace: list | None = None
    coefficient_trace: list | None = None
    cost_trace: list = field(default_factory=list)
    fidelity_trace: list | None = None
    fidelity: float | None = None
    epsilon_trace: list | None = None
    low_confidence_signs: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    settings: dict = field(default_factory=dict)
    input_digests: list | None = None

    def estimate_unitary(self) -> np.ndarray:
        if self.quaternion is not None:
            return spin_ops.quaternion_to_unitary(self.quaternion)
        if self.coefficients is not None:
            n = (len(self.coefficients).bit_length() - 1) // 2
            return spin_ops.closest_unitary(
                spin_ops.pauli_reconstruct(self.coefficients, n)
            )
        raise DegenerateInputError("report carries no estimate")

    def to_dict(self) -> dict:
        est: dict = {}
        if self.quaternion is not None:
            est["quaternion"] = list(self.quaternion.as_array())
        if self.coefficients is not None:
            est["pauli_coefficients"] = [
                [float(c.real), float(c.imag)] for c in self.coefficients
            ]
        out = {
            "method": self.method,
            "estimate": est,
            "iterations": self.iterations,
            "traces": {
                "cost": [float(c) for c in self.cost_trace],
            },
            "settings": self.settings,
            "warnings": list(self.warnings),
            "low_confidence_signs": [list(p) for p in self.low_confidence_signs],
        }
        if self.quaternion_trace is not None:
            out["traces"]["quaternion"] = [list(map(float, q)) for q in self.quaternion_trace]
        if self.coefficient_trace is not None:
            out["traces"]["coefficients"] = [
                [[float(c.real), float(c.imag)] for c in cs_] for cs_ in self.coefficient_trace
            ]
        if self.fidelity_trace is not None:
            out["traces"]["fidelity"] = [float(f) for f in self.fidelity_trace]
        if self.fidelity is not None:
            out["fidelity_vs_reference"] = float(self.fidelity)
        if self.epsilon_trace is not None:
            out["epsilon_trace"] = [float(e) for e in self.epsilon_trace]
        if self.input_digests is not None:
            out["input_digests"] = list(self.input_digests)
        return out


# ---------------------------------------------------------------------------
# Zero-order estimate from the correlation matrix
# ---------------------------------------------------------------------------


def low_confidence_signs(m: CorrelationMatrix, factor: float = 3.0) -> list:
    """Index pairs whose off-diagonal magnitude sits below ``factor`` times the
    estimated noise floor, i.e. whose relative sign is not trustworthy."""
    flagged = []
    k = m.m.shape[0]
    for p in range(k):
        for q in range(p + 1, k):
            if abs(m.m[p, q]) < factor * m.noise_floor:
                flagged.append((p, q))
    return flagged


def zero_order_estimate(m: CorrelationMatrix) -> Quaternion:
    """Quaternion magnitudes from the Gram diagonal, signs from off-diagonals.

    Negative diagonal entries (possible under noise) clamp to zero.  The
    largest-magnitude component serves as the positive sign reference and the
    remaining signs follow ``sign(M[p][ref])``; the result is normalized.
    """
    diag = np.clip(np.diagonal(m.m), 0.0, None)
    if np.max(diag) <= 0.0:
        raise DegenerateInputError("correlation matrix carries no signal")
    mags = np.sqrt(diag)
    ref = int(np.argmax(mags))
    signs = np.ones(len(mags))
    for p in range(len(mags)):
        if p != ref and m.m[p, ref] < 0.0:
            signs[p] = -1.0
    vec = mags * signs
    return Quaternion.from_array(vec / np.linalg.norm(vec))


# ---------------------------------------------------------------------------
# Cost functions
# ---------------------------------------------------------------------------


def _quaternion_matrix(x: np.ndarray) -> np.ndarray:
    """The (generally non-unitary) matrix of an unnormalized 4-vector in the
    quaternion parameterization."""
    a, b, c, d = x
    return np.array([[d + 1j * c, b + 1j * a], [-b + 1j * a, d - 1j * c]])


def quaternion_cost(scaled_matrices, x: np.ndarray) -> float:
    """``J = sum_k || U_hat_k - w_k(x) U(x) ||_F^2`` with weights equal to the
    raw components of ``x``."""
    u = _quaternion_matrix(x)
    total = 0.0
    for w, mat in zip(x, scaled_matrices):
        diff = mat - w * u
        total += float(np.sum(np.abs(diff) ** 2))
    return total


def _coeff_unitary(c: np.ndarray, n: int) -> np.ndarray:
    raw = spin_ops.pauli_reconstruct(c, n)
    if np.linalg.norm(raw) < 1e-12:
        return np.eye(2**n, dtype=complex)
    return spin_ops.closest_unitary(raw)


def coefficient_cost(scaled_matrices, c: np.ndarray, n: int) -> float:
    """``J_gen = sum_k || U_k - conj(c_k) U_est ||_F^2`` with U_est the polar
    projection of ``sum_k c_k sigma_k`` onto the unitaries."""
    u = _coeff_unitary(c, n)
    total = 0.0
    for ck, mat in zip(c, scaled_matrices):
        diff = mat - np.conj(ck) * u
        total += float(np.sum(np.abs(diff) ** 2))
    return total


def _central_difference(fun, x: np.ndarray, step: float) -> np.ndarray:
    grad = np.empty_like(x)
    for i in range(len(x)):
        xp, xm = x.copy(), x.copy()
        xp[i] += step
        xm[i] -= step
        grad[i] = (fun(xp) - fun(xm)) / (2.0 * step)
    return grad


def _minimize(fun, x0: np.ndarray, params: CostParams):
    """Quasi-Newton descent with finite-difference gradients.

    Wolfe line search keeps the accepted-cost sequence nonincreasing; the
    trace records every accepted iterate starting from x0.
    """

    def checked(x):
        val = fun(x)
        if not math.isfinite(val):
            raise DomainError("cost function returned a non-finite value")
        return val

    trace = [x0.copy()]
    result = sp_optimize.minimize(
        checked,
        x0,
        jac=lambda x: _central_difference(checked, x, params.finite_difference_step),
        method="BFGS",
        callback=lambda xk: trace.append(np.array(xk, dtype=float)),
        options={"maxiter": params.max_iterations, "gtol": 1e-10},
    )
    final = np.array(result.x, dtype=float)
    if not np.allclose(final, trace[-1]) and checked(final) <= checked(trace[-1]):
        trace.append(final)
    return trace


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------


def _check_four_droplets(droplets):
    if len(droplets) != 4:
        raise DomainError(f"expected 4 scaled droplets, got {len(droplets)}")


def iterate_reconstruction(
    droplets, params: CostParams | None = None, reference: np.ndarray | None = None
) -> ReconstructionReport:
    """Matched-filter iteration over the four scaled droplets.

    Each pass weights the droplets by the current quaternion estimate,
    combines them, extracts the closest unitary of the reassembled matrix,
    and reads the next quaternion off it; iteration stops when the largest
    component change drops below the tolerance.
    """
    _check_four_droplets(droplets)
    params = params or CostParams()
    m = correlation_matrix(droplets)
    q = zero_order_estimate(m)
    scaled = [droplet_to_operator(f) for f in droplets]

    trace = [q.as_array()]
    for _ in range(params.max_iterations):
        f_comb = combine(droplets, trace[-1])
        mat = droplet_to_operator(f_comb)
        if np.linalg.norm(mat) < _DEGENERATE_NORM:
            raise DegenerateInputError("combined droplet reassembles to ~zero matrix")
        q = spin_ops.unitary_to_quaternion(spin_ops.closest_unitary(mat))
        arr = q.as_array()
        prev = trace[-1]
        change = min(np.max(np.abs(arr - prev)), np.max(np.abs(arr + prev)))
        trace.append(arr if np.max(np.abs(arr - prev)) <= np.max(np.abs(arr + prev)) else -arr)
        if change < params.tolerance:
            break

    final = Quaternion.from_array(trace[-1]).canonical()
    report = ReconstructionReport(
        method="iterate",
        iterations=len(trace) - 1,
        quaternion=final,
        quaternion_trace=trace,
        cost_trace=[quaternion_cost(scaled, t) for t in trace],
        low_confidence_signs=low_confidence_signs(m),
        settings={"tolerance": params.tolerance, "max_iterations": params.max_iterations},
    )
    if reference is not None:
        report.fidelity_trace = [
            fidelity(spin_ops.quaternion_to_unitary(Quaternion.from_array(t).canonical()), reference)
            for t in trace
        ]
        report.fidelity = report.fidelity_trace[-1]
    return report


def optimize_cost(
    scaled_matrices,
    init: Quaternion,
    params: CostParams | None = None,
    reference: np.ndarray | None = None,
) -> ReconstructionReport:
    """Minimize the quaternion-parameterized cost over an unconstrained
    4-vector; the result is normalized on exit."""
    _check_four_droplets(scaled_matrices)
    params = params or CostParams()
    trace = _minimize(
        lambda x: quaternion_cost(scaled_matrices, x), init.as_array(), params
    )
    final = Quaternion.from_array(trace[-1]).canonical()
    report = ReconstructionReport(
        method="optimize",
        iterations=len(trace) - 1,
        quaternion=final,
        quaternion_trace=trace,
        cost_trace=[quaternion_cost(scaled_matrices, t) for t in trace],
        settings={
            "finite_difference_step": params.finite_difference_step,
            "max_iterations": params.max_iterations,
        },
    )
    if reference is not None:
        report.fidelity_trace = [
            fidelity(spin_ops.quaternion_to_unitary(Quaternion.from_array(t).canonical()), reference)
            for t in trace
        ]
        report.fidelity = report.fidelity_trace[-1]
    return report


def coefficient_zero_order(scaled_matrices) -> np.ndarray:
    """Initial Pauli coefficients from the Gram matrix of the scaled matrices.

    The Gram matrix of ideal inputs is the rank-one outer product of the
    coefficient vector, so its leading eigenvector is the natural zero-order
    guess; the global phase is fixed by making the largest entry real
    positive.
    """
    n = spin_ops.num_qubits(scaled_matrices[0])
    k = len(scaled_matrices)
    gram = np.empty((k, k), dtype=complex)
    for p in range(k):
        for q in range(k):
            gram[p, q] = np.trace(scaled_matrices[p].conj().T @ scaled_matrices[q]) / 2**n
    gram = (gram + gram.conj().T) / 2.0
    vals, vecs = np.linalg.eigh(gram)
    if vals[-1] <= _DEGENERATE_NORM**2:
        raise DegenerateInputError("scaled matrices carry no signal")
    # the Gram of ideal inputs is the outer product c c^dag
    c = vecs[:, -1]
    ref = int(np.argmax(np.abs(c)))
    c = c * np.exp(-1j * np.angle(c[ref]))
    return c / np.linalg.norm(c)


def generalized_cost(
    scaled_matrices,
    init: np.ndarray | None = None,
    params: CostParams | None = None,
    reference: np.ndarray | None = None,
) -> ReconstructionReport:
    """Minimize the Pauli-coefficient cost, valid for any qubit count.

    The estimate's unitarity is enforced by polar projection at every cost
    evaluation; the coefficient vector is optimized over real and imaginary
    parts jointly and normalized on exit.
    """
    n = spin_ops.num_qubits(scaled_matrices[0])
    if len(scaled_matrices) != 4**n:
        raise DomainError(
            f"expected {4**n} scaled matrices for n={n}, got {len(scaled_matrices)}"
        )
    params = params or CostParams()
    if init is None:
        init = coefficient_zero_order(scaled_matrices)
    init = np.asarray(init, dtype=complex)

    def pack(c):
        return np.concatenate([c.real, c.imag])

    def unpack(x):
        half = len(x) // 2
        return x[:half] + 1j * x[half:]

    trace_x = _minimize(
        lambda x: coefficient_cost(scaled_matrices, unpack(x), n), pack(init), params
    )
    coeff_trace = [unpack(x) for x in trace_x]
    final = coeff_trace[-1]
    norm = np.linalg.norm(final)
    if norm < _DEGENERATE_NORM:
        raise DegenerateInputError("optimized coefficients vanished")
    final = final / norm
    ref_idx = int(np.argmax(np.abs(final)))
    final = final * np.exp(-1j * np.angle(final[ref_idx]))

    report = ReconstructionReport(
        method="generalized",
        iterations=len(coeff_trace) - 1,
        coefficients=final,
        coefficient_trace=coeff_trace,
        cost_trace=[coefficient_cost(scaled_matrices, c, n) for c in coeff_trace],
        settings={
            "finite_difference_step": params.finite_difference_step,
            "max_iterations": params.max_iterations,
        },
    )
    if reference is not None:
        report.fidelity_trace = [
            fidelity(_coeff_unitary(c, n), reference) for c in coeff_trace
        ]
        report.fidelity = report.fidelity_trace[-1]
    return report


# ---------------------------------------------------------------------------
# Adaptive single-rotation tomography
# ---------------------------------------------------------------------------


def adaptive_reconstruct(
    actual: np.ndarray,
    guess: np.ndarray,
    cfg: ScanConfig,
    iterations: int = 2,
    reference: np.ndarray | None = None,
    epsilon_floor: float = 0.05,
) -> ReconstructionReport:
    """Tomography with a single controlled rotation, iterated.

    The first pass scans with the guess as the rotation; each subsequent pass
    re-scans with the previous estimate, which raises the scaling factor (and
    with it the signal) whenever the estimate improves.  The shot budget is
    split evenly across iterations.
    """
    if actual.shape != (2, 2) or guess.shape != (2, 2):
        raise DomainError("adaptive reconstruction handles single-qubit processes")
    if iterations < 1:
        raise DomainError("need at least one iteration")
    reference = actual if reference is None else reference
    per_iter = None if cfg.shots is None else max(1, cfg.shots // iterations)

    rotation = guess
    warnings: list[str] = []
    eps_trace: list[float] = []
    fid_trace: list[float] = []
    estimate = None
    for r in range(1, iterations + 1):
        cfg_r = replace(
            cfg,
            shots=per_iter,
            rotations=(custom_rotation(rotation, f"adaptive_iter{r}"),),
            seed=cs.derive_seed(cfg.seed, "adaptive", r),
        )
        result = scan(actual, cfg_r)
        f = result.droplets[1]
        eps = droplet_norm(f)
        eps_trace.append(eps)
        if eps < epsilon_floor:
            warnings.append(
                f"iteration {r}: scaling factor {eps:.4f} below floor "
                f"{epsilon_floor}, rotation is nearly blind to the process"
            )
        mat = droplet_to_operator(f)
        if np.linalg.norm(mat) < _DEGENERATE_NORM:
            raise DegenerateInputError("tomographed droplet reassembles to ~zero matrix")
        estimate = spin_ops.quaternion_to_unitary(
            spin_ops.unitary_to_quaternion(spin_ops.closest_unitary(mat))
        )
        rotation = estimate
        fid_trace.append(fidelity(estimate, reference))

    q = spin_ops.unitary_to_quaternion(estimate)
    return ReconstructionReport(
        method="adaptive",
        iterations=iterations,
        quaternion=q,
        quaternion_trace=None,
        cost_trace=[],
        fidelity_trace=fid_trace,
        fidelity=fid_trace[-1],
        epsilon_trace=eps_trace,
        warnings=warnings,
        settings={"iterations": iterations, "shots_per_iteration": per_iter or 0},
    )

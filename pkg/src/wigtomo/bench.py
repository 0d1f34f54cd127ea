"""Monte-Carlo study harness.

Reproduces the two benchmark studies at simulation scale: the shot-budget
sweep of the full scanning pipeline (reconstruction with and without the
cost optimizer) and the equal-total-shot comparison between full scanning,
adaptive scanning, single-rotation scanning, and a standard process
tomography baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import circuit_sim as cs
from . import reconstruct as rc
from . import spin_ops
from .droplet import correlation_matrix, droplet_to_operator, fidelity, lebedev_grid
from .errors import DegenerateInputError, DomainError
from .tomography import (
    DEFAULT_SEED,
    ScanConfig,
    _ideal_channel_values,
    droplets_from_estimates,
    sample_estimates,
)

SCENARIOS = ("full_wigner", "adaptive_two_iter", "non_iterative", "standard")

#: Detection settings per scanned node (x- and y-channel circuits).
_SETTINGS_PER_NODE = 2
#: Circuits of the standard baseline: 4 input states x 3 measurement bases.
_STANDARD_CIRCUITS = 12


# ---------------------------------------------------------------------------
# Random gates
# ---------------------------------------------------------------------------


def random_quaternion(rng) -> spin_ops.Quaternion:
    """Uniform point on the 3-sphere from four standard normals."""
    vec = rng.normal(size=4)
    return spin_ops.Quaternion.from_array(vec / np.linalg.norm(vec))


def random_unitary(seed_or_rng) -> np.ndarray:
    """Haar-uniform single-qubit special unitary."""
    rng = (
        seed_or_rng
        if isinstance(seed_or_rng, np.random.Generator)
        else np.random.default_rng(seed_or_rng)
    )
    return spin_ops.quaternion_to_unitary(random_quaternion(rng))


def tilt_gate(unitary: np.ndarray, angle: float, rng) -> np.ndarray:
    """Rotate the gate's rotation axis by ``angle`` while keeping its rotation
    angle; the tilt plane is spanned by the axis and a seeded orthogonal
    direction."""
    q = spin_ops.unitary_to_quaternion(unitary)
    gamma, axis = spin_ops.quaternion_axis_angle(q)
    ortho = rng.normal(size=3)
    ortho -= axis * np.dot(ortho, axis)
    norm = np.linalg.norm(ortho)
    while norm < 1e-12:
        ortho = rng.normal(size=3)
        ortho -= axis * np.dot(ortho, axis)
        norm = np.linalg.norm(ortho)
    ortho /= norm
    new_axis = math.cos(angle) * axis + math.sin(angle) * ortho
    return spin_ops.axis_angle_gate(gamma, new_axis)


# ---------------------------------------------------------------------------
# Standard process tomography baseline
# ---------------------------------------------------------------------------

_INPUT_STATES = (
    np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex),  # |0>
    np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex),  # |1>
    np.full((2, 2), 0.5, dtype=complex),  # |+>
    np.array([[0.5, -0.5j], [0.5j, 0.5]], dtype=complex),  # |+i>
)
_BASES = (spin_ops.SIGMA_X, spin_ops.SIGMA_Y, spin_ops.SIGMA_Z)


def standard_tomography(
    unitary: np.ndarray, shots: int | None, seed: int = 0
) -> np.ndarray:
    """Single-qubit process estimate from 12 preparation/measurement circuits.

    Four input states and three Pauli bases give a linear-inversion channel
    estimate; the unnormalized Choi matrix's leading eigenvector is reshaped
    into a matrix and polar-projected onto the closest unitary.  ``shots``
    of None computes exact expectation values; otherwise the budget is spread
    over the 12 circuits, floor division with the remainder round-robin.
    """
    if unitary.shape != (2, 2):
        raise DomainError("standard baseline handles single-qubit processes")
    rng = np.random.default_rng(cs.derive_seed(seed, "standard_tomography"))
    alloc = None
    if shots is not None:
        base, rem = divmod(shots, _STANDARD_CIRCUITS)
        alloc = [base + (1 if i < rem else 0) for i in range(_STANDARD_CIRCUITS)]
        if min(alloc) < 1:
            raise DomainError(
                f"{shots} shots cannot cover {_STANDARD_CIRCUITS} circuits"
            )

    outputs = []
    circuit = 0
    for rho_in in _INPUT_STATES:
        rho_out = unitary @ rho_in @ unitary.conj().T
        bloch = []
        for basis in _BASES:
            value = float(np.real(np.trace(basis @ rho_out)))
            if alloc is not None:
                value = cs.binomial_estimate(value, alloc[circuit], rng)
            bloch.append(value)
            circuit += 1
        outputs.append(
            0.5
            * (
                spin_ops.IDENTITY_2
                + bloch[0] * spin_ops.SIGMA_X
                + bloch[1] * spin_ops.SIGMA_Y
                + bloch[2] * spin_ops.SIGMA_Z
            )
        )

    out0, out1, outp, outpi = outputs
    e_id = out0 + out1
    e_z = out0 - out1
    e_x = 2.0 * outp - e_id
    e_y = 2.0 * outpi - e_id
    e_01 = (e_x + 1j * e_y) / 2.0  # image of |0><1|
    e_10 = (e_x - 1j * e_y) / 2.0
    e_00 = (e_id + e_z) / 2.0
    e_11 = (e_id - e_z) / 2.0

    choi = np.zeros((4, 4), dtype=complex)
    blocks = {(0, 0): e_00, (0, 1): e_01, (1, 0): e_10, (1, 1): e_11}
    for (i, j), block in blocks.items():
        choi[2 * i : 2 * i + 2, 2 * j : 2 * j + 2] = block
    choi = (choi + choi.conj().T) / 2.0
    vals, vecs = np.linalg.eigh(choi)
    if vals[-1] < 1e-10:
        raise DegenerateInputError("Choi matrix has no dominant component")
    # eigenvector components are ordered (input bit, output bit)
    v = vecs[:, -1].reshape(2, 2).T
    return spin_ops.closest_unitary(v)


# ---------------------------------------------------------------------------
# Studies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StudyConfig:
    scenario: str
    shots_grid: tuple[int, ...]
    gates: int = 100
    noise_instances: int = 50
    seed: int = DEFAULT_SEED
    grid_order: int = 26
    #: "total": grid values are total budgets N_tot shared by all circuits of
    #: the scenario; "per_circuit": values are shots per circuit N_s.
    budget: str = "total"
    guess_tilt: float = math.radians(30.0)
    actual_tilt: float = math.radians(2.0)

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise DomainError(f"unknown scenario {self.scenario!r}; known: {SCENARIOS}")
        if self.gates < 1 or self.noise_instances < 1:
            raise DomainError("gate and noise-instance counts must be >= 1")
        if self.budget not in ("total", "per_circuit"):
            raise DomainError("budget must be 'total' or 'per_circuit'")
        if not self.shots_grid:
            raise DomainError("shots_grid must not be empty")


@dataclass
class StudyResult:
    config: StudyConfig
    records: list[dict]
    summary: dict
    #: The reported error is 1 - mean fidelity; recorded here because the
    #: comparison plots leave the metric implicit.
    error_metric: str = "one_minus_mean_fidelity"

    def mean_fidelity(self, shots_value: int, method: str = "optimized") -> float:
        return self.summary[str(shots_value)][method]["mean"]

    def mean_error(self, shots_value: int, method: str = "optimized") -> float:
        return 1.0 - self.mean_fidelity(shots_value, method)


def circuits_per_trial(scenario: str, n_nodes: int) -> int:
    """Simulated circuit count of one trial, used for shot-budget accounting."""
    per_scan = n_nodes * _SETTINGS_PER_NODE
    return {
        "full_wigner": per_scan * 4,
        "adaptive_two_iter": per_scan * 2,
        "non_iterative": per_scan,
        "standard": _STANDARD_CIRCUITS,
    }[scenario]


def _full_wigner_trial(tables, cfg: ScanConfig, trial_seed: int, target):
    """One reconstruction from resampled estimates; returns both fidelities."""
    rng = np.random.default_rng(trial_seed)
    estimates = sample_estimates(tables, cfg, rng)
    _, adjusted = droplets_from_estimates(estimates, cfg)
    fs = [adjusted[k] for k in (1, 2, 3, 4)]
    plain = rc.iterate_reconstruction(fs, reference=target)
    q0 = rc.zero_order_estimate(correlation_matrix(fs))
    mats = [droplet_to_operator(f) for f in fs]
    opt = rc.optimize_cost(mats, q0, reference=target)
    return plain.fidelity, opt.fidelity


def run_study(study: StudyConfig) -> StudyResult:
    """Run every (shots value, gate, noise instance) trial of a scenario.

    Bit-reproducible from (config, seed): gates are drawn from per-index
    seeds and every trial owns a derived seed.
    """
    grid = lebedev_grid(study.grid_order)
    n_circ = circuits_per_trial(study.scenario, len(grid))
    records: list[dict] = []

    gates = [
        random_unitary(cs.derive_seed(study.seed, "gate", i)) for i in range(study.gates)
    ]
    base_cfg = ScanConfig(grid=grid, seed=study.seed)

    # ideal channel tables are gate-specific but shot- and noise-independent
    table_cache: dict[int, dict] = {}

    for value in study.shots_grid:
        for gate_idx, target in enumerate(gates):
            trial_rng_seed = cs.derive_seed(
                study.seed, study.scenario, value, gate_idx
            )
            if study.scenario == "full_wigner":
                per_circuit = (
                    value if study.budget == "per_circuit" else max(4, value // n_circ)
                )
                if gate_idx not in table_cache:
                    table_cache[gate_idx] = _ideal_channel_values(target, base_cfg)
                cfg = replace(base_cfg, shots=per_circuit)
                for noise_idx in range(study.noise_instances):
                    plain, opt = _full_wigner_trial(
                        table_cache[gate_idx],
                        cfg,
                        cs.derive_seed(trial_rng_seed, noise_idx),
                        target,
                    )
                    records.append(
                        {
                            "scenario": study.scenario,
                            "shots_value": value,
                            "gate": gate_idx,
                            "noise": noise_idx,
                            "fidelity_plain": plain,
                            "fidelity_optimized": opt,
                            "shots_spent": per_circuit * n_circ,
                        }
                    )
            elif study.scenario in ("adaptive_two_iter", "non_iterative"):
                iterations = 2 if study.scenario == "adaptive_two_iter" else 1
                per_scan_circ = len(grid) * _SETTINGS_PER_NODE
                budget = (
                    value * per_scan_circ * iterations
                    if study.budget == "per_circuit"
                    else value
                )
                cfg_shots = max(iterations * 4, budget // per_scan_circ)
                for noise_idx in range(study.noise_instances):
                    rng = np.random.default_rng(
                        cs.derive_seed(trial_rng_seed, noise_idx)
                    )
                    if study.scenario == "adaptive_two_iter":
                        actual = target
                        guess = tilt_gate(target, study.guess_tilt, rng)
                    else:
                        actual = tilt_gate(target, study.actual_tilt, rng)
                        guess = target
                    cfg = replace(
                        base_cfg,
                        shots=cfg_shots,
                        seed=cs.derive_seed(trial_rng_seed, noise_idx, "scan"),
                    )
                    report = rc.adaptive_reconstruct(
                        actual, guess, cfg, iterations=iterations, reference=actual
                    )
                    records.append(
                        {
                            "scenario": study.scenario,
                            "shots_value": value,
                            "gate": gate_idx,
                            "noise": noise_idx,
                            "fidelity_plain": report.fidelity,
                            "fidelity_optimized": report.fidelity,
                            "shots_spent": (cfg_shots // iterations)
                            * per_scan_circ
                            * iterations,
                        }
                    )
            else:  # standard
                shots = (
                    value * _STANDARD_CIRCUITS if study.budget == "per_circuit" else value
                )
                for noise_idx in range(study.noise_instances):
                    estimate = standard_tomography(
                        target,
                        shots,
                        seed=cs.derive_seed(trial_rng_seed, noise_idx),
                    )
                    fid = fidelity(estimate, target)
                    records.append(
                        {
                            "scenario": study.scenario,
                            "shots_value": value,
                            "gate": gate_idx,
                            "noise": noise_idx,
                            "fidelity_plain": fid,
                            "fidelity_optimized": fid,
                            "shots_spent": shots,
                        }
                    )

    summary: dict = {}
    for value in study.shots_grid:
        rows = [r for r in records if r["shots_value"] == value]
        summary[str(value)] = {
            method: {
                "mean": float(np.mean([r[f"fidelity_{key}"] for r in rows])),
                "std": float(np.std([r[f"fidelity_{key}"] for r in rows])),
            }
            for method, key in (("plain", "plain"), ("optimized", "optimized"))
        }
    return StudyResult(config=study, records=records, summary=summary)

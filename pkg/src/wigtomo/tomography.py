"""The scanning engine.

Assembles per-rotation droplets of a single-qubit process from simulated
expectation values over a sphere grid, with an optional two-parameter noise
model (uniform amplitude scaling of expectation values plus a spurious phase
rotation of the control qubit before detection) and the calibration routine
that measures and compensates the phase.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import circuit_sim as cs
from . import spin_ops
from .droplet import Droplet, SphereGrid, phase_adjust
from .errors import CalibrationError, DomainError, UnsupportedError

#: Observable ids, in record order: sigma_x/sigma_y on q0, optionally paired
#: with sigma_z on the system qubit.
OBSERVABLES = ("x", "y", "xz", "yz")

#: Default seed used when the caller supplies none; never OS entropy.
DEFAULT_SEED = 20240715


@dataclass(frozen=True)
class NoiseModel:
    """Uniform amplitude scaling plus a control-qubit phase shift."""

    amplitude_scale: float = 1.0
    ancilla_phase: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.amplitude_scale <= 1.0:
            raise DomainError(
                f"amplitude scale must be in (0, 1], got {self.amplitude_scale}"
            )


@dataclass(frozen=True)
class RotationSpec:
    """One controlled rotation of the scan: index k, gate, and whether the
    assembled droplet gets the i phase adjustment."""

    name: str
    matrix: np.ndarray
    k: int
    adjust: bool


def standard_rotations() -> tuple[RotationSpec, ...]:
    """The four Pauli controlled rotations in canonical order."""
    return (
        RotationSpec("x", spin_ops.SIGMA_X.copy(), 1, True),
        RotationSpec("y", spin_ops.SIGMA_Y.copy(), 2, True),
        RotationSpec("z", spin_ops.SIGMA_Z.copy(), 3, True),
        RotationSpec("id", spin_ops.IDENTITY_2.copy(), 4, False),
    )


def custom_rotation(matrix: np.ndarray, name: str = "custom", k: int = 1) -> RotationSpec:
    """A single user-chosen controlled rotation; no phase adjustment."""
    return RotationSpec(name, np.asarray(matrix, dtype=complex), k, False)


@dataclass(frozen=True)
class ScanConfig:
    grid: SphereGrid
    shots: int | None = None  # None selects exact expectation values
    rotations: tuple[RotationSpec, ...] = field(default_factory=standard_rotations)
    seed: int = DEFAULT_SEED
    noise: NoiseModel = field(default_factory=NoiseModel)
    correction: float = 0.0
    gate_name: str = ""

    def __post_init__(self):
        if not self.rotations:
            raise DomainError("scan needs at least one controlled rotation")
        if self.shots is not None and self.shots < 1:
            raise DomainError("shot count must be >= 1 in shot mode")


@dataclass(frozen=True)
class ExpectationRecord:
    grid_index: int
    theta: float
    phi: float
    weight: float
    k: int
    observable: str
    ideal: float
    estimate: float
    shots: int
    seed: int


@dataclass
class ScanResult:
    droplets: dict[int, Droplet]  # phase-adjusted, keyed by rotation index k
    raw_droplets: dict[int, Droplet]
    records: list[ExpectationRecord]
    config: ScanConfig


def detection_rotation(axis: str) -> cs.Gate:
    """Rotation on q0 mapping the named Pauli expectation onto sigma_z.

    x uses U3(-pi/2, 0, 0) and y uses U3(pi/2, 0, pi/2).
    """
    if axis == "x":
        mat = spin_ops.u3(-math.pi / 2.0, 0.0, 0.0)
    elif axis == "y":
        mat = spin_ops.u3(math.pi / 2.0, 0.0, math.pi / 2.0)
    else:
        raise DomainError(f"detection axis must be 'x' or 'y', got {axis!r}")
    return cs.Gate(matrix=mat, targets=(0,), name=f"detect_{axis}")


def apply_noise(circuit: list[cs.Gate], noise: NoiseModel) -> list[cs.Gate]:
    """Insert the noise phase rotation on q0 at the end of the pre-detection
    segment.  Amplitude scaling acts on expectation values, not on gates, and
    is applied by the measurement stage."""
    if noise.ancilla_phase == 0.0:
        return list(circuit)
    return list(circuit) + [
        cs.Gate(matrix=spin_ops.rz(noise.ancilla_phase), targets=(0,), name="noise_rz")
    ]


def apply_correction(cfg: ScanConfig, lambda_corr: float) -> ScanConfig:
    """Compensate the measured phase by rotating q0 back before detection.

    Applying the same correction twice over-rotates; the config accumulates.
    """
    return replace(cfg, correction=cfg.correction + lambda_corr)


# ---------------------------------------------------------------------------
# Internals
# ---------------------------------------------------------------------------


def _effective_observables(phase: float) -> dict[str, np.ndarray]:
    """Heisenberg-picture observables for the four measured channels.

    The physical circuit applies RZ(phase) on q0, the detection rotation on
    q0, then measures sigma_z on q0 (times sigma_z on q1 for the two-qubit
    channels).  Conjugating the measurement back through those gates gives one
    4x4 observable per channel.
    """
    z = spin_ops.rz(phase)
    obs = {}
    for axis in ("x", "y"):
        d = detection_rotation(axis).matrix
        q0 = z.conj().T @ d.conj().T @ spin_ops.SIGMA_Z @ d @ z
        obs[axis] = spin_ops.kron_all(q0, spin_ops.IDENTITY_2)
        obs[axis + "z"] = spin_ops.kron_all(q0, spin_ops.SIGMA_Z)
    return obs


def _mapped_states(unitary: np.ndarray, rotation: np.ndarray) -> list[np.ndarray]:
    """Post-trace two-qubit states for the four basis preparations.

    Simulates the full three-qubit mapping circuit for each computational
    basis preparation of (q1, q1a) with q0 in |+>, then traces out the
    ancilla.  Their average equals the maximally-mixed-input state.
    """
    gates = cs.mapping_circuit(unitary, rotation)
    states = []
    for bits in cs.preparation_family(1):
        rho = cs.apply_circuit(cs.prepared_state(bits), gates, 3)
        states.append(cs.partial_trace(rho, keep=[0, 1], n=3))
    return states


def _node_rotated(states: np.ndarray, grid: SphereGrid) -> np.ndarray:
    """Apply the inverse scan rotation on the system qubit for every node.

    Returns an array of shape (n_states, n_nodes, 4, 4) holding
    ``(1 x R)^dag rho (1 x R)`` with R = R(alpha=phi_i, beta=theta_i).
    """
    half_t = grid.theta / 2.0
    half_p = grid.phi / 2.0
    c, s = np.cos(half_t), np.sin(half_t)
    em, ep = np.exp(-1j * half_p), np.exp(1j * half_p)
    r = np.empty((len(grid), 2, 2), dtype=complex)
    r[:, 0, 0] = em * c
    r[:, 0, 1] = -em * s
    r[:, 1, 0] = ep * s
    r[:, 1, 1] = ep * c
    eye = np.eye(2)
    w = np.einsum("ab,ncd->nacbd", eye, r.conj().transpose(0, 2, 1)).reshape(
        len(grid), 4, 4
    )
    return np.einsum("nab,sbc,ncd->snad", w, states, w.conj().transpose(0, 2, 1))


def _ideal_channel_values(
    unitary: np.ndarray, cfg: ScanConfig, extra_phase: float = 0.0
):
    """Exact per-preparation channel values for every rotation and node.

    Returns ``{k: array (4 preps, 4 observables, n_nodes)}`` already scaled by
    the noise amplitude, observable axis ordered like OBSERVABLES.
    """
    phase = cfg.noise.ancilla_phase - cfg.correction + extra_phase
    effective = _effective_observables(phase)
    scale = cfg.noise.amplitude_scale
    out = {}
    for spec in cfg.rotations:
        states = np.stack(_mapped_states(unitary, spec.matrix))
        rotated = _node_rotated(states, cfg.grid)
        vals = np.empty((states.shape[0], len(OBSERVABLES), len(cfg.grid)))
        for oi, obs_name in enumerate(OBSERVABLES):
            vals[:, oi, :] = scale * np.real(
                np.einsum("ab,snba->sn", effective[obs_name], rotated)
            )
        out[spec.k] = vals
    return out


def _split_shots(total: int, parts: int) -> list[int]:
    base, rem = divmod(total, parts)
    return [base + (1 if i < rem else 0) for i in range(parts)]


def _estimate_from_preps(prep_values, shots: int | None, rng) -> tuple[float, float]:
    """(ideal, estimate) for one record.

    Ideal is the preparation average; the estimate splits the shot budget
    evenly over the preparations and averages one binomial draw per
    preparation.  Budgets smaller than the preparation count fall back to a
    single draw at the averaged probability.
    """
    ideal = float(np.mean(prep_values))
    if shots is None:
        return ideal, ideal
    if shots < len(prep_values):
        return ideal, cs.binomial_estimate(ideal, shots, rng)
    allocation = _split_shots(shots, len(prep_values))
    est = 0.0
    for p_true, n_shots in zip(prep_values, allocation):
        est += cs.binomial_estimate(float(p_true), n_shots, rng)
    return ideal, est / len(prep_values)


# Scanned droplets are normalized to match the analytic droplet of the scaled
# process (unit norm for unitaries): the raw channel combination carries a
# 1/2^(N+1) factor from the density-matrix trace that is undone here.
def _assembly_factors(n: int) -> dict[str, complex]:
    factor = 2 ** (n + 1)
    return {
        "": factor * 0.25 * math.sqrt(1.0 / (2.0 * math.pi)),
        "1": factor * 0.25 * math.sqrt(3.0 / (2.0 * math.pi)),
    }


def scan(unitary: np.ndarray, cfg: ScanConfig) -> ScanResult:
    """Tomograph the scaled droplets of a single-qubit process.

    For every controlled rotation and grid node the mapping circuit is
    simulated over the four basis preparations, the inverse scan rotation is
    applied to the system qubit, the noise model acts, and the four channel
    expectations are measured through detection rotations.  Channel estimates
    are combined into per-label droplet samples and phase adjusted.
    """
    n = spin_ops.num_qubits(unitary)
    if n != 1:
        raise UnsupportedError(
            f"scanning circuits are implemented for single-qubit processes, got n={n}"
        )
    if not spin_ops.is_unitary(unitary, tol=1e-10):
        raise DomainError("process matrix must be unitary")
    ideal_tables = _ideal_channel_values(unitary, cfg)
    return assemble_scan(ideal_tables, cfg)


def droplets_from_estimates(
    estimates: dict[int, np.ndarray], cfg: ScanConfig
) -> tuple[dict[int, Droplet], dict[int, Droplet]]:
    """Assemble raw and phase-adjusted droplets from channel estimate arrays
    of shape (4 observables, n_nodes), keyed by rotation index."""
    factors = _assembly_factors(1)
    raw: dict[int, Droplet] = {}
    adjusted: dict[int, Droplet] = {}
    for spec in cfg.rotations:
        est = estimates[spec.k]
        samples = {
            "": factors[""] * (est[0] + 1j * est[1]),
            "1": factors["1"] * (est[2] + 1j * est[3]),
        }
        meta = {
            "k": spec.k,
            "rotation": spec.name,
            "gate_name": cfg.gate_name,
            "shots": cfg.shots or 0,
            "seed": cfg.seed,
        }
        f = Droplet(grid=cfg.grid, samples=samples, dim=2, meta=meta)
        raw[spec.k] = f
        adjusted[spec.k] = phase_adjust(f, spec.k) if spec.adjust else f.copy()
    return raw, adjusted


def assemble_scan(ideal_tables: dict, cfg: ScanConfig) -> ScanResult:
    """Turn per-preparation channel tables into records and droplets.

    Every record draws from its own generator seeded by
    ``hash(seed, k, observable, grid_index)`` so results do not depend on
    execution order.
    """
    records: list[ExpectationRecord] = []
    estimates: dict[int, np.ndarray] = {}
    for spec in cfg.rotations:
        vals = ideal_tables[spec.k]
        est = np.empty((len(OBSERVABLES), len(cfg.grid)))
        for oi, obs_name in enumerate(OBSERVABLES):
            for i in range(len(cfg.grid)):
                seed = cs.derive_seed(cfg.seed, spec.k, obs_name, i)
                rng = np.random.default_rng(seed) if cfg.shots is not None else None
                ideal, estimate = _estimate_from_preps(
                    vals[:, oi, i], cfg.shots, rng
                )
                est[oi, i] = estimate
                records.append(
                    ExpectationRecord(
                        grid_index=i,
                        theta=float(cfg.grid.theta[i]),
                        phi=float(cfg.grid.phi[i]),
                        weight=float(cfg.grid.weight[i]),
                        k=spec.k,
                        observable=obs_name,
                        ideal=ideal,
                        estimate=estimate,
                        shots=cfg.shots or 0,
                        seed=seed,
                    )
                )
        estimates[spec.k] = est
    raw, adjusted = droplets_from_estimates(estimates, cfg)
    return ScanResult(droplets=adjusted, raw_droplets=raw, records=records, config=cfg)


def sample_estimates(
    ideal_tables: dict, cfg: ScanConfig, rng
) -> dict[int, np.ndarray]:
    """Vectorized resampling of a scan's channel estimates.

    Used by benchmark sweeps that redraw many noise instances from one ideal
    table; draws come from the supplied generator in a fixed order rather
    than from per-record seeds, so reproducibility is per run.
    """
    if cfg.shots is None:
        return {k: np.mean(v, axis=0) for k, v in ideal_tables.items()}
    out = {}
    for spec in cfg.rotations:
        vals = ideal_tables[spec.k]  # (preps, obs, nodes)
        n_preps = vals.shape[0]
        if cfg.shots < n_preps:
            p = np.clip((1.0 + np.mean(vals, axis=0)) / 2.0, 0.0, 1.0)
            out[spec.k] = 2.0 * rng.binomial(cfg.shots, p) / cfg.shots - 1.0
            continue
        alloc = np.array(_split_shots(cfg.shots, n_preps))[:, None, None]
        p = np.clip((1.0 + vals) / 2.0, 0.0, 1.0)
        draws = rng.binomial(alloc, p)
        out[spec.k] = np.mean(2.0 * draws / alloc - 1.0, axis=0)
    return out


# ---------------------------------------------------------------------------
# Calibration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CalibrationResult:
    lambda_corr: float
    fit_residual: float
    amplitude: float = 1.0


def _wrap_angle(x: float) -> float:
    return float(np.mod(x + math.pi, 2.0 * math.pi) - math.pi)


def calibrate(cfg: ScanConfig, lambda_sweep) -> CalibrationResult:
    """Measure the spurious control-qubit phase with the X-gate circuits.

    The mapping block uses U = X with a controlled X rotation at the fixed
    scan angles beta = pi/2, alpha = 0; a calibration rotation RZ(lambda) on
    q0 is swept over a full turn and the two two-qubit channels are projected
    onto their first Fourier harmonic.  The common phase of the cosine-like
    and sine-like channels is the correction angle.
    """
    sweep = np.asarray(list(lambda_sweep), dtype=float)
    if len(sweep) < 8:
        raise DomainError("calibration sweep needs at least 8 angles")
    if sweep.max() - sweep.min() < 2.0 * math.pi * (1.0 - 1.0 / len(sweep)) - 1e-9:
        raise DomainError("calibration sweep must cover [0, 2 pi)")

    unitary = spin_ops.named_gate("X")
    node_theta, node_phi = math.pi / 2.0, 0.0
    grid = SphereGrid(
        order=1,
        theta=np.array([node_theta]),
        phi=np.array([node_phi]),
        weight=np.array([1.0]),
    )
    base = replace(cfg, grid=grid, rotations=(custom_rotation(spin_ops.SIGMA_X, "x", 1),))

    xs, ys = [], []
    for idx, lam in enumerate(sweep):
        tables = _ideal_channel_values(unitary, base, extra_phase=float(lam))
        vals = tables[1]  # (4 preps, 4 observables, 1 node)
        row = {}
        for obs_name in ("xz", "yz"):
            oi = OBSERVABLES.index(obs_name)
            rng = None
            if cfg.shots is not None:
                seed = cs.derive_seed(cfg.seed, "calibration", idx, obs_name)
                rng = np.random.default_rng(seed)
            _, estimate = _estimate_from_preps(vals[:, oi, 0], cfg.shots, rng)
            row[obs_name] = estimate
        xs.append(row["xz"])
        ys.append(row["yz"])

    xs, ys = np.array(xs), np.array(ys)
    zx = np.sum(xs * np.exp(-1j * sweep))
    zy = np.sum(ys * np.exp(-1j * sweep))
    amp = (abs(zx) + abs(zy)) / len(sweep)
    if amp < 1e-10:
        raise CalibrationError("calibration signal is identically zero")
    phi_x = np.angle(zx)
    phi_y = np.angle(zy) + math.pi / 2.0
    lam_corr = _wrap_angle(np.angle(np.exp(1j * phi_x) + np.exp(1j * phi_y)))
    model_x = amp * np.cos(sweep + lam_corr)
    model_y = amp * np.sin(sweep + lam_corr)
    residual = float(
        math.sqrt(np.mean((xs - model_x) ** 2 + (ys - model_y) ** 2))
    )
    return CalibrationResult(
        lambda_corr=lam_corr, fit_residual=residual, amplitude=float(amp)
    )


# ---------------------------------------------------------------------------
# Record CSV
# ---------------------------------------------------------------------------

_CSV_COLUMNS = (
    "grid_index",
    "theta",
    "phi",
    "weight",
    "k",
    "observable",
    "ideal",
    "estimate",
    "shots",
    "seed",
)


def write_records_csv(records, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_COLUMNS)
        for r in records:
            writer.writerow(
                [
                    r.grid_index,
                    repr(r.theta),
                    repr(r.phi),
                    repr(r.weight),
                    r.k,
                    r.observable,
                    repr(r.ideal),
                    repr(r.estimate),
                    r.shots,
                    r.seed,
                ]
            )


def read_records_csv(path) -> list[ExpectationRecord]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            out.append(
                ExpectationRecord(
                    grid_index=int(row["grid_index"]),
                    theta=float(row["theta"]),
                    phi=float(row["phi"]),
                    weight=float(row["weight"]),
                    k=int(row["k"]),
                    observable=row["observable"],
                    ideal=float(row["ideal"]),
                    estimate=float(row["estimate"]),
                    shots=int(row["shots"]),
                    seed=int(row["seed"]),
                )
            )
    return out

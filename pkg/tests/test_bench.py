import math

import numpy as np
import pytest

from wigtomo import bench
from wigtomo import droplet as dr
from wigtomo import spin_ops as so
from wigtomo.errors import DomainError


# ---------------------------------------------------------------------------
# Random gates
# ---------------------------------------------------------------------------


def test_random_unitary_reproducible_and_unitary():
    a = bench.random_unitary(123)
    b = bench.random_unitary(123)
    np.testing.assert_array_equal(a, b)
    for seed in range(10):
        assert so.is_unitary(bench.random_unitary(seed))


def test_random_unitary_trace_statistics():
    # Monte-Carlo oracle: E[|tr U| / 2] = E|D| over the uniform 3-sphere,
    # which integrates to 4 / (3 pi) ~ 0.4244
    rng = np.random.default_rng(50)
    values = [abs(np.trace(bench.random_unitary(rng))) / 2.0 for _ in range(10_000)]
    assert abs(np.mean(values) - 4.0 / (3.0 * math.pi)) < 0.02


def test_tilt_preserves_rotation_angle():
    rng = np.random.default_rng(51)
    for _ in range(10):
        u = bench.random_unitary(rng)
        tilted = bench.tilt_gate(u, math.radians(30.0), rng)
        d1 = abs(so.unitary_to_quaternion(u).d)
        d2 = abs(so.unitary_to_quaternion(tilted).d)
        assert abs(2.0 * math.acos(d1) - 2.0 * math.acos(d2)) < 1e-10


def test_tilt_moves_axis_by_requested_angle():
    rng = np.random.default_rng(52)
    u = bench.random_unitary(rng)
    tilted = bench.tilt_gate(u, math.radians(30.0), rng)
    _, ax1 = so.quaternion_axis_angle(so.unitary_to_quaternion(u))
    _, ax2 = so.quaternion_axis_angle(so.unitary_to_quaternion(tilted))
    angle = math.degrees(math.acos(min(1.0, abs(float(np.dot(ax1, ax2))))))
    assert abs(angle - 30.0) < 1e-6


# ---------------------------------------------------------------------------
# Standard tomography baseline
# ---------------------------------------------------------------------------


def test_standard_tomography_exact():
    rng = np.random.default_rng(53)
    for _ in range(10):
        u = bench.random_unitary(rng)
        est = bench.standard_tomography(u, shots=None)
        assert dr.fidelity(est, u) > 1.0 - 1e-10


def test_standard_tomography_shots_improve():
    u = bench.random_unitary(3)
    errs = {}
    for shots in (1_200, 120_000):
        fids = [
            dr.fidelity(bench.standard_tomography(u, shots, seed=s), u)
            for s in range(40)
        ]
        errs[shots] = 1.0 - np.mean(fids)
    assert errs[120_000] < errs[1_200]


def test_standard_tomography_rejects_tiny_budget():
    with pytest.raises(DomainError):
        bench.standard_tomography(bench.random_unitary(1), shots=6)


# ---------------------------------------------------------------------------
# Studies
# ---------------------------------------------------------------------------


def test_study_config_validation():
    with pytest.raises(DomainError):
        bench.StudyConfig(scenario="bogus", shots_grid=(10,))
    with pytest.raises(DomainError):
        bench.StudyConfig(scenario="standard", shots_grid=())
    with pytest.raises(DomainError):
        bench.StudyConfig(scenario="standard", shots_grid=(10,), budget="weird")


def test_study_reproducible_and_bounded():
    cfg = bench.StudyConfig(
        scenario="standard", shots_grid=(2_400,), gates=6, noise_instances=2, seed=9
    )
    r1 = bench.run_study(cfg)
    r2 = bench.run_study(cfg)
    assert r1.records == r2.records
    for rec in r1.records:
        assert 0.0 <= rec["fidelity_optimized"] <= 1.0


@pytest.mark.parametrize("scenario", bench.SCENARIOS)
def test_shot_accounting(scenario):
    n_tot = 20_800
    cfg = bench.StudyConfig(
        scenario=scenario, shots_grid=(n_tot,), gates=2, noise_instances=1, seed=10
    )
    res = bench.run_study(cfg)
    grid = dr.lebedev_grid(cfg.grid_order)
    circuits = bench.circuits_per_trial(scenario, len(grid))
    for rec in res.records:
        assert rec["shots_spent"] <= n_tot
        assert n_tot - rec["shots_spent"] < circuits


def test_full_wigner_noise_free_sanity():
    cfg = bench.StudyConfig(
        scenario="full_wigner",
        shots_grid=(10**7,),
        gates=3,
        noise_instances=1,
        seed=11,
        grid_order=26,
    )
    res = bench.run_study(cfg)
    for rec in res.records:
        assert rec["fidelity_optimized"] > 0.9999


def test_shot_sweep_shape_mini():
    # miniature version of the shot-budget sweep: means improve with shots
    # and the optimizer does not trail the plain iteration
    cfg = bench.StudyConfig(
        scenario="full_wigner",
        shots_grid=(50, 1000),
        gates=6,
        noise_instances=6,
        seed=12,
        grid_order=26,
        budget="per_circuit",
    )
    res = bench.run_study(cfg)
    m50 = res.summary["50"]
    m1000 = res.summary["1000"]
    assert m1000["plain"]["mean"] >= m50["plain"]["mean"]
    assert m1000["optimized"]["mean"] >= m50["optimized"]["mean"]
    assert m50["optimized"]["mean"] >= m50["plain"]["mean"] - 1e-4

import json
import math

import numpy as np
import pytest

from conftest import random_su2
from wigtomo import droplet as dr
from wigtomo import spin_ops as so
from wigtomo.errors import DomainError, GridMismatchError

FOUR_PI = 4.0 * math.pi


# ---------------------------------------------------------------------------
# Independent spherical-harmonic oracle (associated-Legendre recurrence)
# ---------------------------------------------------------------------------


def _assoc_legendre(j, m, x):
    # Condon-Shortley phase included in P_m^m = (-1)^m (2m-1)!! (1-x^2)^(m/2)
    pmm = np.ones_like(x)
    if m > 0:
        fact = 1.0
        for _ in range(m):
            pmm *= -fact * np.sqrt(1.0 - x * x)
            fact += 2.0
    if j == m:
        return pmm
    pm1 = x * (2 * m + 1) * pmm
    if j == m + 1:
        return pm1
    for ll in range(m + 2, j + 1):
        pm1, pmm = ((2 * ll - 1) * x * pm1 - (ll + m - 1) * pmm) / (ll - m), pm1
    return pm1


def harmonic_oracle(j, m, theta, phi):
    ma = abs(m)
    norm = math.sqrt(
        (2 * j + 1) / FOUR_PI * math.factorial(j - ma) / math.factorial(j + ma)
    )
    val = norm * _assoc_legendre(j, ma, np.cos(theta)) * np.exp(1j * ma * np.asarray(phi))
    if m < 0:
        val = (-1) ** ma * np.conj(val)
    return val


# ---------------------------------------------------------------------------
# Lebedev grids
# ---------------------------------------------------------------------------


def test_order6_is_octahedron():
    g = dr.lebedev_grid(6)
    np.testing.assert_allclose(g.weight, np.full(6, 1.0 / 6.0), atol=1e-15)
    vecs = {tuple(np.round(v, 12)) for v in g.unit_vectors()}
    expected = {
        (1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)
    }
    assert vecs == {tuple(float(x) for x in v) for v in expected}


def test_order26_unit_quadrature():
    g = dr.lebedev_grid(26)
    y00 = dr.spherical_harmonic(0, 0, g.theta, g.phi)
    val = FOUR_PI * np.sum(g.weight * np.abs(y00) ** 2)
    assert abs(val - 1.0) < 1e-12


def test_order50_integrates_products_to_degree_11(grid50):
    worst = 0.0
    harmonics = {
        (j, m): dr.spherical_harmonic(j, m, grid50.theta, grid50.phi)
        for j in range(7)
        for m in range(-j, j + 1)
    }
    for (j1, m1), y1 in harmonics.items():
        for (j2, m2), y2 in harmonics.items():
            if j1 + j2 > 11:
                continue
            val = FOUR_PI * np.sum(grid50.weight * np.conj(y1) * y2)
            expected = 1.0 if (j1, m1) == (j2, m2) else 0.0
            worst = max(worst, abs(val - expected))
    assert worst < 1e-10


def test_unsupported_order():
    with pytest.raises(DomainError):
        dr.lebedev_grid(14)


# ---------------------------------------------------------------------------
# Spherical harmonics
# ---------------------------------------------------------------------------


def test_harmonics_basic_values():
    theta, phi = 0.7, 1.3
    assert abs(dr.spherical_harmonic(0, 0, theta, phi) - 1.0 / math.sqrt(FOUR_PI)) < 1e-15
    expected = math.sqrt(3.0 / FOUR_PI) * math.cos(theta)
    assert abs(dr.spherical_harmonic(1, 0, theta, phi) - expected) < 1e-14


def test_harmonics_match_recurrence_oracle():
    rng = np.random.default_rng(12)
    theta = rng.uniform(0, math.pi, size=20)
    phi = rng.uniform(0, 2 * math.pi, size=20)
    for j in range(4):
        for m in range(-j, j + 1):
            np.testing.assert_allclose(
                dr.spherical_harmonic(j, m, theta, phi),
                harmonic_oracle(j, m, theta, phi),
                atol=1e-12,
            )


def test_harmonics_orthogonal_on_grid26(grid26):
    y_p = dr.spherical_harmonic(1, 1, grid26.theta, grid26.phi)
    y_m = dr.spherical_harmonic(1, -1, grid26.theta, grid26.phi)
    assert abs(FOUR_PI * np.sum(grid26.weight * np.conj(y_p) * y_m)) < 1e-12


def test_harmonics_invalid_order():
    with pytest.raises(DomainError):
        dr.spherical_harmonic(1, 2, 0.0, 0.0)


# ---------------------------------------------------------------------------
# Operator <-> droplet transforms
# ---------------------------------------------------------------------------


def test_droplet_of_hadamard_has_no_identity_part(grid50):
    f = dr.operator_to_droplet(so.named_gate("H"), grid50)
    assert np.max(np.abs(f.samples[""])) < 1e-12


def test_droplet_of_identity(grid50):
    f = dr.operator_to_droplet(np.eye(2, dtype=complex), grid50)
    assert np.max(np.abs(f.samples["1"])) < 1e-12
    expected = math.sqrt(2.0) * math.sqrt(1.0 / FOUR_PI)
    np.testing.assert_allclose(f.samples[""], expected, atol=1e-12)


def test_droplet_of_s_gate(grid50):
    f = dr.operator_to_droplet(so.named_gate("S"), grid50)
    np.testing.assert_allclose(f.samples[""], 1.0 / math.sqrt(FOUR_PI), atol=1e-12)
    expected = -1j * math.sqrt(3.0 / FOUR_PI) * np.cos(grid50.theta)
    np.testing.assert_allclose(f.samples["1"], expected, atol=1e-12)


def test_round_trip_identity(grid26):
    f = dr.operator_to_droplet(np.eye(2, dtype=complex), grid26)
    np.testing.assert_allclose(dr.droplet_to_operator(f), np.eye(2), atol=1e-10)


def test_round_trip_random(grid50, grid26):
    rng = np.random.default_rng(13)
    for grid in (grid50, grid26):
        for _ in range(10):
            u = random_su2(rng)
            f = dr.operator_to_droplet(u, grid)
            np.testing.assert_allclose(dr.droplet_to_operator(f), u, atol=1e-10)
        mat = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        f = dr.operator_to_droplet(mat, grid)
        np.testing.assert_allclose(dr.droplet_to_operator(f), mat, atol=1e-10)


def test_round_trip_two_qubit(grid26):
    rng = np.random.default_rng(14)
    cnot = so.named_gate("CNOT")
    f = dr.operator_to_droplet(cnot, grid26)
    assert f.labels == ["", "1", "12", "2"] or set(f.labels) == {"", "1", "2", "12"}
    np.testing.assert_allclose(dr.droplet_to_operator(f), cnot, atol=1e-10)
    mat = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    # restrict to the admissible tensor span: project onto tabulated tensors
    proj = np.zeros_like(mat)
    for label, ranks in so.admissible_tensor_set(2).items():
        for j in ranks:
            for m, t in so.tensor_multiplet(2, label, j).items():
                proj += np.trace(t.conj().T @ mat) * t
    f2 = dr.operator_to_droplet(proj, grid26)
    np.testing.assert_allclose(dr.droplet_to_operator(f2), proj, atol=1e-10)


def test_noisy_droplet_polar_part_close_to_gate(grid50):
    rng = np.random.default_rng(15)
    x = so.named_gate("X")
    f = dr.operator_to_droplet(x, grid50)
    for label in f.labels:
        f.samples[label] = f.samples[label] + 0.02 * (
            rng.normal(size=len(grid50)) + 1j * rng.normal(size=len(grid50))
        )
    mat = dr.droplet_to_operator(f)
    assert np.max(np.abs(mat @ mat.conj().T - np.eye(2))) > 1e-6  # not unitary
    assert dr.fidelity(so.closest_unitary(mat), x) > 0.999


# ---------------------------------------------------------------------------
# Scalar products, correlation, combination
# ---------------------------------------------------------------------------


def test_scalar_product_identity_norm(grid50):
    f = dr.operator_to_droplet(np.eye(2, dtype=complex), grid50)
    assert abs(dr.scalar_product(f, f) - 1.0) < 1e-12


def test_scalar_product_hadamard_orthogonal_to_identity(grid50):
    fh = dr.operator_to_droplet(so.named_gate("H"), grid50)
    fi = dr.operator_to_droplet(np.eye(2, dtype=complex), grid50)
    assert abs(dr.scalar_product(fh, fi)) < 1e-12


def test_unit_norm_for_random_unitaries(grid50, grid26):
    rng = np.random.default_rng(16)
    for grid in (grid50, grid26):
        for _ in range(50):
            f = dr.operator_to_droplet(random_su2(rng), grid)
            assert abs(dr.scalar_product(f, f).real - 1.0) < 1e-9


def test_scalar_product_matches_trace(grid50):
    rng = np.random.default_rng(17)
    for _ in range(10):
        a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        b = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        fa, fb = dr.operator_to_droplet(a, grid50), dr.operator_to_droplet(b, grid50)
        expected = np.trace(a.conj().T @ b) / 2.0
        assert abs(dr.scalar_product(fa, fb) - expected) < 1e-9


def test_scalar_product_grid_mismatch(grid50, grid26):
    f50 = dr.operator_to_droplet(np.eye(2, dtype=complex), grid50)
    f26 = dr.operator_to_droplet(np.eye(2, dtype=complex), grid26)
    with pytest.raises(GridMismatchError):
        dr.scalar_product(f50, f26)


def test_correlation_matrix_example(grid50, example_gate):
    u, q = example_gate
    w = q.as_array()
    droplets = [dr.operator_to_droplet(wk * u, grid50) for wk in w]
    m = dr.correlation_matrix(droplets)
    np.testing.assert_allclose(np.diagonal(m.m), w**2, atol=1e-9)
    # matches the printed four-digit squares of the worked example
    np.testing.assert_allclose(
        np.diagonal(m.m), [0.2702, 0.1199, 0.5512, 0.0588], atol=1e-4
    )
    assert np.max(np.abs(m.m - m.m.T)) < 1e-12


def test_correlation_matrix_single_component(grid50):
    x = so.named_gate("X")
    zero = dr.operator_to_droplet(0.0 * x, grid50)
    droplets = [dr.operator_to_droplet(x, grid50), zero, zero, zero]
    m = dr.correlation_matrix(droplets).m
    assert abs(m[0, 0] - 1.0) < 1e-9
    assert np.max(np.abs(m - np.diag([m[0, 0], 0, 0, 0]))) < 1e-12


def test_correlation_cauchy_schwarz_on_noisy(grid26):
    rng = np.random.default_rng(18)
    droplets = []
    for wk in (0.9, 0.3, -0.2, 0.1):
        f = dr.operator_to_droplet(wk * random_su2(rng), grid26)
        for label in f.labels:
            f.samples[label] += 0.05 * (
                rng.normal(size=len(grid26)) + 1j * rng.normal(size=len(grid26))
            )
        droplets.append(f)
    m = dr.correlation_matrix(droplets).m
    for p in range(4):
        for q_ in range(4):
            assert m[p, q_] ** 2 <= m[p, p] * m[q_, q_] + 1e-12


def test_combine_matched_weights_reproduce_actual(grid50, example_gate):
    u, q = example_gate
    w = q.as_array()
    droplets = [dr.operator_to_droplet(wk * u, grid50) for wk in w]
    combined = dr.combine(droplets, w)
    target = dr.operator_to_droplet(u, grid50)
    for label in target.labels:
        np.testing.assert_allclose(
            combined.samples[label], target.samples[label], atol=1e-12
        )


def test_combine_degenerate_weights(grid26):
    f = dr.operator_to_droplet(so.named_gate("H"), grid26)
    zero = dr.combine([f, f], [0.0, 0.0])
    assert all(np.max(np.abs(zero.samples[l])) == 0.0 for l in zero.labels)
    same = dr.combine([f, f, f, f], [1.0, 0.0, 0.0, 0.0])
    for label in f.labels:
        np.testing.assert_allclose(same.samples[label], f.samples[label], atol=0)
    with pytest.raises(DomainError):
        dr.combine([f, f], [1.0])


def test_fidelity_examples():
    x, z, h = so.named_gate("X"), so.named_gate("Z"), so.named_gate("H")
    assert abs(dr.fidelity(h, h) - 1.0) < 1e-15
    assert dr.fidelity(x, z) < 1e-15
    assert abs(dr.fidelity(h, x) - 1.0 / math.sqrt(2.0)) < 1e-12
    with pytest.raises(DomainError):
        dr.fidelity(x, so.named_gate("CNOT"))


def test_phase_adjust(grid26):
    f = dr.operator_to_droplet(so.named_gate("H"), grid26)
    same = dr.phase_adjust(f, 4)
    np.testing.assert_allclose(same.samples["1"], f.samples["1"], atol=0)
    twice = dr.phase_adjust(dr.phase_adjust(f, 1), 1)
    np.testing.assert_allclose(twice.samples["1"], -f.samples["1"], atol=0)
    np.testing.assert_allclose(dr.phase_adjust(np.eye(2), 2), 1j * np.eye(2), atol=0)
    with pytest.raises(DomainError):
        dr.phase_adjust(f, 5)


# ---------------------------------------------------------------------------
# Rotation covariance
# ---------------------------------------------------------------------------


def _node_permutation(grid, mapper):
    vecs = grid.unit_vectors()
    mapped = np.array([mapper(v) for v in vecs])
    perm = []
    for v in mapped:
        dists = np.linalg.norm(vecs - v, axis=1)
        idx = int(np.argmin(dists))
        assert dists[idx] < 1e-12
        perm.append(idx)
    return perm


@pytest.mark.parametrize("axis", ["z", "y"])
def test_rotation_covariance_quarter_turn(grid50, axis):
    # droplet of R U R^dag equals the droplet of U evaluated at rotated nodes
    rng = np.random.default_rng(19)
    u = random_su2(rng)
    angle = math.pi / 2.0
    if axis == "z":
        r = so.rz(angle)
        mapper = lambda v: np.array(
            [
                math.cos(angle) * v[0] - math.sin(angle) * v[1],
                math.sin(angle) * v[0] + math.cos(angle) * v[1],
                v[2],
            ]
        )
    else:
        r = so.ry(angle)
        mapper = lambda v: np.array(
            [
                math.cos(angle) * v[0] + math.sin(angle) * v[2],
                v[1],
                -math.sin(angle) * v[0] + math.cos(angle) * v[2],
            ]
        )
    f_rot = dr.operator_to_droplet(r @ u @ r.conj().T, grid50)
    f = dr.operator_to_droplet(u, grid50)
    # node of the rotated droplet at direction R v equals original at v
    perm = _node_permutation(grid50, mapper)
    for label in f.labels:
        np.testing.assert_allclose(
            f_rot.samples[label][perm], f.samples[label], atol=1e-10
        )


# ---------------------------------------------------------------------------
# File format
# ---------------------------------------------------------------------------


def test_droplet_json_round_trip(tmp_path, grid26):
    f = dr.operator_to_droplet(so.named_gate("S"), grid26)
    f.meta = {"k": 3, "gate_name": "S", "shots": 128, "seed": 99}
    path = tmp_path / "droplet.json"
    dr.save_droplet(f, path)
    g = dr.load_droplet(path)
    assert g.meta == f.meta
    assert g.dim == 2
    for label in f.labels:
        # bit-exact round trip through the JSON representation
        assert np.array_equal(g.samples[label], f.samples[label])
    assert np.array_equal(g.grid.theta, f.grid.theta)
    data = json.loads(path.read_text())
    assert set(data["labels"]) == {"empty", "1"}

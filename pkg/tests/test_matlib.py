import numpy as np
import pytest
import scipy.linalg
import scipy.signal
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dtude import matlib
from dtude.errors import ControllabilityError, DimensionError, NumericalError, SingularityError, StabilityError
from dtude.manipulator import JOINT_BLOCKS, nominal_input_matrix, ACTUAL

small = st.floats(-2.0, 2.0, allow_nan=False)


def test_expm_zero():
    np.testing.assert_array_equal(matlib.expm(np.zeros((4, 4)), 0.01), np.eye(4))


def test_expm_nilpotent_manipulator():
    a, _ = nominal_input_matrix(ACTUAL)
    np.testing.assert_allclose(a @ a, 0.0)
    np.testing.assert_allclose(matlib.expm(a, 0.01), np.eye(4) + 0.01 * a, atol=1e-15)


def test_expm_diagonal():
    got = matlib.expm(np.diag([-1.0, -2.0]), 0.01)
    np.testing.assert_allclose(np.diag(got), np.exp([-0.01, -0.02]), rtol=1e-14)
    np.testing.assert_allclose(np.diag(got), [0.990050, 0.980199], atol=1e-6)


@settings(max_examples=60, deadline=None)
@given(arrays(float, (3, 3), elements=small), st.floats(0.001, 1.0))
def test_expm_inverse_property(a, t):
    np.testing.assert_allclose(matlib.expm(a, t) @ matlib.expm(a, -t), np.eye(3), atol=1e-10)


def test_pinv_examples(sys10):
    np.testing.assert_allclose(matlib.pinv([[0.0], [1.0]]), [[0.0, 1.0]])
    np.testing.assert_allclose(matlib.pinv(np.eye(2)), np.eye(2))
    gp = matlib.pinv(sys10.Gn)
    assert gp.shape == (2, 4)
    np.testing.assert_allclose(gp @ sys10.Gn, np.eye(2), atol=1e-10)
    np.testing.assert_allclose(gp, np.linalg.pinv(sys10.Gn), rtol=1e-8)


def test_pinv_rank_deficient():
    with pytest.raises(SingularityError):
        matlib.pinv([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])


@settings(max_examples=60, deadline=None)
@given(arrays(float, (5, 2), elements=small))
def test_pinv_left_inverse_property(b):
    try:
        bp = matlib.pinv(b)
    except SingularityError:
        return
    np.testing.assert_allclose(bp @ b, np.eye(2), atol=1e-10)


def test_eigenvalues_examples():
    assert sorted(matlib.eigenvalues(np.diag([0.5, -0.25])).real) == [-0.25, 0.5]
    np.testing.assert_allclose(sorted(matlib.eigenvalues([[0.0, 1.0], [-2.0, -3.0]]).real), [-2.0, -1.0])


def test_block_triangular_spectrum(rng):
    fc = rng.normal(size=(3, 3)) * 0.3
    fo = rng.normal(size=(2, 2)) * 0.3
    m = np.block([[fc, rng.normal(size=(3, 2))], [np.zeros((2, 3)), fo]])
    union = np.concatenate([np.linalg.eigvals(fc), np.linalg.eigvals(fo)])
    assert matlib.spectrum_distance(matlib.eigenvalues(m), union) < 1e-9
    # independent oracle: Schur form from scipy
    t, _ = scipy.linalg.schur(m, output="complex")
    assert matlib.spectrum_distance(np.diag(t), union) < 1e-9


def test_spectral_radius_examples(sys10):
    assert matlib.spectral_radius(np.eye(2)) == pytest.approx(1.0)
    assert matlib.spectral_radius(np.diag([0.9, -0.95])) == pytest.approx(0.95)
    assert matlib.spectral_radius(sys10.Fm) == pytest.approx(np.exp(-0.01), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(arrays(float, (2, 2), elements=small), arrays(float, (3, 3), elements=small), arrays(float, (2, 3), elements=small))
def test_spectral_radius_block_property(a, b, x):
    m = np.block([[a, x], [np.zeros((3, 2)), b]])
    expect = max(matlib.spectral_radius(a), matlib.spectral_radius(b))
    assert abs(matlib.spectral_radius(m) - expect) < 1e-9 * max(1.0, expect)


def test_spectral_norm_matches_svd(rng):
    a = rng.normal(size=(6, 6))
    assert matlib.spectral_norm(a) == pytest.approx(np.linalg.svd(a, compute_uv=False)[0], rel=1e-12)


def test_dlyap_examples():
    np.testing.assert_allclose(matlib.solve_dlyap(np.zeros((2, 2))), np.eye(2))
    np.testing.assert_allclose(matlib.solve_dlyap([[0.5]]), [[4.0 / 3.0]])


def test_dlyap_rejects_unstable():
    with pytest.raises(StabilityError):
        matlib.solve_dlyap(np.diag([0.5, 1.0]))


@settings(max_examples=60, deadline=None)
@given(arrays(float, (4, 4), elements=small))
def test_dlyap_property(a):
    rho = matlib.spectral_radius(a)
    a = a * (0.9 / rho) if rho > 0.9 else a
    p = matlib.solve_dlyap(a)
    assert np.max(np.abs(p - p.T)) < 1e-12
    assert np.linalg.norm(a.T @ p @ a - p + np.eye(4)) < 1e-9 * max(1.0, np.linalg.norm(p))
    assert np.min(np.linalg.eigvalsh(p)) > 0
    np.testing.assert_allclose(p, scipy.linalg.solve_discrete_lyapunov(a.T, np.eye(4)), rtol=1e-7, atol=1e-9)


def test_place_poles_first_joint_block():
    ts = 0.01
    f = np.array([[1.0, ts], [0.0, 1.0]])
    g = np.array([[ts**2 / (2 * 17)], [ts / 17]])
    k = matlib.place_poles(f, g, np.exp([-0.01, -0.02]))
    # at Ts = 0.01; the 0.001 s values are checked in test_sampling_time
    assert k[0, 0] == pytest.approx(33.495, rel=1e-3)
    assert k[0, 1] == pytest.approx(50.41, rel=1e-3)
    np.testing.assert_allclose(sorted(np.linalg.eigvals(f - g @ k).real), np.exp([-0.02, -0.01]), atol=1e-8)


def test_place_poles_second_joint_block():
    ts = 0.01
    f = np.array([[1.0, ts], [0.0, 1.0]])
    g = np.array([[ts**2 / 2], [ts]])
    k = matlib.place_poles(f, g, np.exp([-0.01, -0.02]))
    assert k[0, 0] == pytest.approx(1.970, rel=1e-3)
    assert k[0, 1] == pytest.approx(2.965, rel=1e-3)


def test_place_poles_already_placed():
    np.testing.assert_allclose(matlib.place_poles([[0.5]], [[1.0]], [0.5]), [[0.0]], atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(arrays(float, (3, 3), elements=small), arrays(float, (3, 1), elements=small),
       st.lists(st.floats(-0.9, 0.9), min_size=3, max_size=3))
def test_place_poles_matches_scipy(f, g, targets):
    if np.linalg.cond(matlib.controllability_matrix(f, g)) > 1e6 or min(
        abs(a - b) for i, a in enumerate(targets) for b in targets[i + 1:]
    ) < 1e-2:
        return
    k = matlib.place_poles(f, g, targets)
    assert matlib.spectrum_distance(np.linalg.eigvals(f - g @ k), targets) < 1e-8
    ref = scipy.signal.place_poles(f, g, targets).gain_matrix
    np.testing.assert_allclose(k, ref, rtol=1e-5, atol=1e-6)


def test_place_poles_multi_block(sys10):
    tgt = matlib.block_eigenvalues(sys10.Fm, JOINT_BLOCKS)
    k = matlib.place_poles(sys10.Fn, sys10.Gn, tgt, JOINT_BLOCKS)
    assert matlib.spectrum_distance(np.linalg.eigvals(sys10.Fn - sys10.Gn @ k), np.concatenate(tgt)) < 1e-8
    assert k[0, 2] == k[0, 3] == k[1, 0] == k[1, 1] == 0.0


def test_place_poles_errors():
    with pytest.raises(ControllabilityError):
        matlib.place_poles(np.eye(2), [[1.0], [1.0]], [0.1, 0.2])
    with pytest.raises(DimensionError):
        matlib.place_poles(np.eye(2), np.eye(2), [0.1, 0.2])
    with pytest.raises(ValueError):
        matlib.place_poles([[0.0, 1.0], [0.0, 0.0]], [[0.0], [1.0]], [0.1 + 0.1j, 0.2])


def test_block_eigenvalues(sys10):
    blocks = matlib.block_eigenvalues(sys10.Fm, JOINT_BLOCKS)
    for b in blocks:
        np.testing.assert_allclose(sorted(b.real), np.exp([-0.02, -0.01]), atol=1e-12)

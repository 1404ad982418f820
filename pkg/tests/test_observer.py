import warnings
from dataclasses import replace
from types import SimpleNamespace

import numpy as np
import pytest

from dtude import matlib
from dtude.errors import ProtocolError, StabilityError
from dtude.observer import (
    ObserverConfig,
    ObserverState,
    controller_observer_step,
    design_beta,
    observer_step,
    recover_dist_estimate,
)
from dtude.simkern import run_linear_observer
from dtude.ude import UdeState


def test_design_beta_closed_form(sys10):
    beta = design_beta(sys10)
    l1, l2 = 0.1 * np.exp(-0.01), 0.1 * np.exp(-0.02)
    b1 = 2.0 - (l1 + l2)  # trace condition
    b2 = (l1 * l2 - 1.0 + b1) / 0.01  # determinant condition
    np.testing.assert_allclose(beta[[0, 1], 0], [b1, b2], rtol=1e-10)
    np.testing.assert_allclose(beta[[2, 3], 1], [b1, b2], rtol=1e-10)
    assert beta[0, 1] == beta[1, 1] == beta[2, 0] == beta[3, 0] == 0.0
    assert b1 == pytest.approx(1.803, abs=1e-3)
    assert b2 == pytest.approx(81.27, abs=0.01)


def test_design_beta_eigenvalues(sys10):
    beta = design_beta(sys10)
    tgt = 0.1 * np.linalg.eigvals(sys10.Fm)
    assert matlib.spectrum_distance(np.linalg.eigvals(sys10.Fn - beta @ sys10.C), tgt) < 1e-8


def test_design_beta_open_loop_targets(sys10):
    beta = design_beta(sys10, targets=[[1.0, 1.0], [1.0, 1.0]])
    assert matlib.spectrum_distance(np.linalg.eigvals(sys10.Fn - beta @ sys10.C), np.ones(4)) < 1e-8


def test_design_beta_rejects_outside_disk(sys10):
    with pytest.raises(StabilityError):
        design_beta(sys10, targets=[[1.2, 0.5], [0.5, 0.5]])


def test_observer_config_checks(sys10):
    with pytest.raises(StabilityError):
        ObserverConfig(sys=sys10, beta=np.zeros((4, 2)))
    slow = design_beta(sys10, targets=[[0.995, 0.996], [0.995, 0.996]])
    with pytest.warns(UserWarning, match="not faster"):
        ObserverConfig(sys=sys10, beta=slow, controller_radius=0.99)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ObserverConfig(sys=sys10, beta=design_beta(sys10), controller_radius=0.99)


def test_recover_examples(sys10):
    np.testing.assert_array_equal(recover_dist_estimate(sys10, np.zeros(2), np.zeros(4), np.zeros(2)), 0.0)
    matched = replace(sys10, Fm=sys10.Fn)
    ud = np.array([0.4, -0.9])
    np.testing.assert_allclose(recover_dist_estimate(matched, ud, np.ones(4), np.zeros(2)), -sys10.Gn @ ud)


def test_recover_hand_oracle(sys10):
    fn, fm, gn, gm = sys10.Fn, sys10.Fm, sys10.Gn, sys10.Gm
    got = recover_dist_estimate(sys10, [1.0, 1.0], [1.0, 0, 0, 0], [1.0, 0.0])
    want = [-(gn[i, 0] + gn[i, 1]) - (fn[i, 0] - fm[i, 0]) + gm[i, 0] for i in range(4)]
    np.testing.assert_allclose(got, want, rtol=1e-13, atol=1e-16)


def test_perfect_estimate_stays_exact(sys10):
    ocfg = ObserverConfig(sys=sys10, beta=design_beta(sys10))
    x = np.array([0.1, 0.2, -0.3, 0.4])
    ost = ObserverState.initial(x)
    dd = np.array([1e-4, 2e-3, -1e-4, 3e-3])
    for k in range(20):
        u = np.array([np.sin(k), np.cos(k)])
        ost = observer_step(ocfg, ost, u, dd, sys10.C @ x, k)
        x = sys10.Fn @ x + sys10.Gn @ u + dd
        np.testing.assert_allclose(ost.xhat, x, atol=1e-13)


def test_open_loop_matrix_power(sys10):
    ocfg = SimpleNamespace(sys=sys10, beta=np.zeros((4, 2)))
    e1 = np.array([1.0, 0, 0, 0])
    ost = ObserverState.initial(e1)
    for k in range(1, 8):
        ost = observer_step(ocfg, ost, np.zeros(2), np.zeros(4), sys10.C @ ost.xhat)
        np.testing.assert_allclose(ost.xhat, np.linalg.matrix_power(sys10.Fn, k) @ e1, atol=1e-14)
    e2 = np.array([0.0, 1.0, 0, 0])
    ost = ObserverState.initial(e2)
    for k in range(1, 8):
        ost = observer_step(ocfg, ost, np.zeros(2), np.zeros(4), np.zeros(2))
        np.testing.assert_allclose(ost.xhat, np.linalg.matrix_power(sys10.Fn, k) @ e2, atol=1e-14)


def test_estimation_error_matrix_power(sys10):
    ocfg = ObserverConfig(sys=sys10, beta=design_beta(sys10))
    x = np.array([0.5, -0.2, 0.1, 0.3])
    ost = ObserverState.initial(np.zeros(4))
    dd = np.array([2e-5, 4e-3, 1e-5, -2e-3])
    e0 = x - ost.xhat
    for k in range(1, 15):
        u = np.array([0.1 * k, -0.2])
        ost = observer_step(ocfg, ost, u, dd, sys10.C @ x)
        x = sys10.Fn @ x + sys10.Gn @ u + dd
        np.testing.assert_allclose(x - ost.xhat, np.linalg.matrix_power(ocfg.Fo, k) @ e0, atol=1e-12)


def test_zero_everything_gives_zero_control(loop10):
    ucfg, ocfg = loop10
    tr = run_linear_observer(ucfg, ocfg, np.zeros(4), 50)
    np.testing.assert_array_equal(tr.u, 0.0)


def test_first_control_reads_only_ehat(loop10):
    ucfg, ocfg = loop10
    xm = np.array([0.2, 0.1, -0.4, 0.0])
    u, *_ = controller_observer_step(
        ucfg, UdeState.initial(2), ocfg, ObserverState.initial(xm), xm, np.zeros(2), np.array([5.0, -3.0]), 0
    )
    np.testing.assert_array_equal(u, 0.0)


def _scripted(loop10, steps=5):
    ucfg, ocfg = loop10
    dd = lambda k: np.array([1e-5 * k, 1e-3, -2e-5, 5e-4 * np.sin(k)])  # noqa: E731
    return run_linear_observer(ucfg, ocfg, dd, steps, x0=[0.3, 0, -0.2, 0.1], r=lambda k: [np.sin(k), 1.0])


def test_replay_oracle(loop10):
    ucfg, _ = loop10
    tr = _scripted(loop10)
    ehat = tr.ehat
    g = ucfg.gain * np.linalg.pinv(ucfg.sys.Gn)
    acc = -g @ ehat[0]
    u_want = [-(ucfg.Kd + g) @ ehat[0]]
    for k in range(1, len(ehat)):
        acc = acc - g @ (ehat[k] - ucfg.Fc @ ehat[k - 1])
        u_want.append(-ucfg.Kd @ ehat[k] + acc)
    np.testing.assert_allclose(tr.u, u_want, rtol=1e-9, atol=1e-9)


def test_auxiliary_error_recursion(loop10):
    ucfg, ocfg = loop10
    tr = _scripted(loop10, 200)
    pred = tr.ehat[:-1] @ ucfg.Fc.T + tr.e_se[:-1] @ (ocfg.beta @ ucfg.sys.C).T
    np.testing.assert_allclose(tr.ehat[1:], pred, atol=1e-9)


def test_control_forms_agree(loop10):
    tr = _scripted(loop10, 200)
    step = np.max(np.abs(np.diff(tr.u_d, axis=0)), axis=1)
    assert np.all(tr.form_gap[1:] <= 1e-10 * np.maximum(1.0, step))


def test_decomposition(loop10):
    tr = _scripted(loop10, 50)
    assert np.array_equal(tr.e, tr.x - tr.xm)
    np.testing.assert_allclose(tr.e, tr.e_se + tr.ehat, rtol=0, atol=4 * np.finfo(float).eps * np.max(np.abs(tr.x)))


def test_step_mismatch(loop10):
    ucfg, ocfg = loop10
    with pytest.raises(ProtocolError):
        controller_observer_step(
            ucfg, UdeState.initial(2), ocfg, ObserverState(np.zeros(4), np.zeros(4), step_index=1),
            np.zeros(4), np.zeros(2), np.zeros(2),
        )

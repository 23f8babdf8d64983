import math

import numpy as np
import pytest

from sdriesz.spectral import (
    DeltaOperator,
    RieszSystem,
    SpectrumSpec,
    apply_delta_power,
    dense_delta,
)
from sdriesz.stability import (
    PowerBoundProbe,
    check_sampling_nonpathological,
    decay_test,
    power_bound_integral,
    quadrature_points,
    sampled_trajectory,
    unit_circle_test,
)

from conftest import random_system, scalar_system
from test_assumptions import worked_example

PROBE = PowerBoundProbe()


def stable_open_loop(N=40):
    spec = SpectrumSpec([-0.5 + 1j, -0.5 - 1j, -2.0], N, 1.0)
    return RieszSystem(spec, np.zeros(N), np.zeros(N))


def jordan_probe():
    """Unit-modulus mode coupled by feedback into a 2x2 Jordan block at ``i``.

    With ``tau = 1``: ``exp(i pi/2) = i`` and ``s_2 f_2 = i - e^{-1}`` moves the
    second mode onto ``i`` as well, with nonzero coupling ``s_1 f_2``.
    """
    spec = SpectrumSpec([0.5j * math.pi, -1.0], 2)
    f2 = (1j - math.exp(-1)) / (1 - math.exp(-1))
    return DeltaOperator(RieszSystem(spec, [1.0, 1.0], [0.0, f2]), 1.0)


# ---- unit-circle test ------------------------------------------------------------

def test_unit_circle_open_loop_passes():
    assert unit_circle_test(stable_open_loop(), 0.3).ok


def test_unit_circle_imaginary_eigenvalue_fails():
    sys = RieszSystem(SpectrumSpec([1j, -1.0], 10, 1.0), np.zeros(10), np.zeros(10))
    v = unit_circle_test(sys, 0.3)
    assert not v.ok and v.unit_modulus_modes == [0]


def test_unit_circle_example_small_tau_with_dense_oracle():
    sys = worked_example(N=64)
    v = unit_circle_test(sys, 0.2)
    assert v.ok and v.epsilon_d > 0
    eig = np.linalg.eigvals(dense_delta(DeltaOperator(sys, 0.2)))
    assert np.max(np.abs(eig)) < 1
    # the triangular structure leaves the tail factors in place and moves the head
    tail_mu = np.exp(0.2 * sys.lam[1:])
    head = [e for e in eig if np.min(np.abs(e - tail_mu)) > 1e-9]
    assert len(head) == 1 and head[0] == pytest.approx(2 - math.exp(0.2), rel=1e-9)


def test_unit_circle_A6_violation_fails():
    v = unit_circle_test(scalar_system(-1.0, 1.0, 1.0), 0.2)
    assert not v.ok and v.near_one_margin < 1e-12


# ---- power-bound integral ------------------------------------------------------------

def test_power_bound_scalar_closed_form():
    op = DeltaOperator(scalar_system(-1.0, 0.0, 0.0), math.log(2))
    vals = power_bound_integral(op, PROBE, [1.0])
    r = np.array(PROBE.r_values)
    np.testing.assert_allclose(vals, (r - 1) * 2 * math.pi / (r**2 - 0.25), rtol=1e-12)
    assert np.all(np.diff(vals) < 0)


def test_power_bound_deep_tail_mode_stays_bounded():
    mu = 1 - 1e-6
    lam = math.log(mu)
    op = DeltaOperator(scalar_system(lam, 0.0, 0.0), 1.0)
    vals = power_bound_integral(op, PROBE, [1.0])
    r = np.array(PROBE.r_values)
    np.testing.assert_allclose(vals, (r - 1) * 2 * math.pi / (r**2 - mu**2), rtol=1e-9)
    assert vals[-1] < math.pi * 1.01


def test_power_bound_diagonal_unit_mode_is_bounded():
    op = DeltaOperator(RieszSystem(SpectrumSpec([0.5j * math.pi], 1), [0.0], [0.0]), 1.0)
    vals = power_bound_integral(op, PROBE, [1.0])
    assert vals[-1] == pytest.approx(math.pi, rel=1e-3)


def test_power_bound_jordan_unit_mode_blows_up():
    op = jordan_probe()
    assert np.allclose(dense_delta(op), [[1j, dense_delta(op)[0, 1]], [0, 1j]], atol=1e-15)
    vals = power_bound_integral(op, PROBE, [0.0, 1.0])
    assert np.all(vals[1:] / vals[:-1] > 5)
    adj = power_bound_integral(op, PROBE, [1.0, 0.0], adjoint=True)
    assert np.all(adj[1:] / adj[:-1] > 5)


def test_power_bound_quadrature_convergence():
    op = DeltaOperator(scalar_system(), 0.3)
    a = power_bound_integral(op, PowerBoundProbe(n_theta=512), [1.0])
    b = power_bound_integral(op, PowerBoundProbe(n_theta=1024), [1.0])
    np.testing.assert_allclose(a, b, rtol=1e-2)


def test_power_bound_adjoint_symmetry_self_adjoint():
    # real spectrum and f = -s make Delta = diag(mu) - s s^T symmetric
    N = 12
    spec = SpectrumSpec([-0.3, -2.0], N, 1.0)
    b = 1.0 / np.arange(1, N + 1)
    sys = RieszSystem(spec, b, np.zeros(N))
    s = DeltaOperator(sys, 0.4).s.real
    op = DeltaOperator(sys.with_feedback(-s), 0.4)
    assert np.allclose(dense_delta(op), dense_delta(op).T)
    x = np.linspace(1, 2, N)
    np.testing.assert_allclose(power_bound_integral(op, PROBE, x),
                               power_bound_integral(op, PROBE, x, adjoint=True), rtol=1e-6)


def test_power_bound_adjoint_matches_dense(rng):
    sys = random_system(rng, N=10, n_head=2, unstable=0)
    op = DeltaOperator(sys, 0.5)
    D = dense_delta(op)
    y = rng.normal(size=10) + 1j * rng.normal(size=10)
    r, n = 1.1, quadrature_points(1.1, 256)
    z = r * np.exp(2j * math.pi * np.arange(n) / n)
    total = sum(np.linalg.norm(np.linalg.solve((zk * np.eye(10) - D).conj().T, y)) ** 2 for zk in z)
    expected = (r - 1) * total * 2 * math.pi / n
    got = power_bound_integral(op, PowerBoundProbe(r_values=(1.1,), n_theta=256), y, adjoint=True)
    assert got[0] == pytest.approx(expected, rel=1e-9)


def test_power_bound_failure_reported_as_inf():
    op = DeltaOperator(RieszSystem(SpectrumSpec([math.log(1.1)], 1), [0.0], [0.0]), 1.0)
    vals = power_bound_integral(op, PowerBoundProbe(r_values=(1.5, 1.1), n_theta=256), [1.0])
    assert np.isfinite(vals[0]) and vals[1] == math.inf


def test_probe_validation():
    with pytest.raises(ValueError):
        PowerBoundProbe(r_values=(1.01, 1.1))
    with pytest.raises(ValueError):
        PowerBoundProbe(r_values=(1.1, 1.0))
    with pytest.raises(ValueError):
        PowerBoundProbe(n_theta=100)


# ---- decay ------------------------------------------------------------------------------

def test_decay_open_loop_head_state():
    op = DeltaOperator(stable_open_loop(), 1.0)
    x = np.zeros(40)
    x[:3] = 1
    rec = decay_test(op, x, 100, 1e-3)
    assert np.all(np.diff(rec.norms) < 0)
    assert rec.k_hit is not None and rec.norms[0] == pytest.approx(math.sqrt(3))
    assert rec.k_hit == math.ceil(math.log(1e-3) / -0.5)


def test_decay_deep_tail_slow_but_monotone():
    N = 1000
    spec = SpectrumSpec([], N, 1.0)
    op = DeltaOperator(RieszSystem(spec, np.zeros(N), np.zeros(N)), 0.01)
    x = np.zeros(N)
    x[-1] = 1.0
    rec = decay_test(op, x, 10_000, 1e-3)
    assert rec.k_hit is None and rec.eventual_decay
    assert np.all(np.diff(rec.norms) < 0)
    assert rec.norms[-1] == pytest.approx(math.exp(-1e-5 * 10_000), rel=1e-10)


def test_decay_dead_beat_scalar():
    op = DeltaOperator(scalar_system(), math.log(2))
    rec = decay_test(op, [1.0], 5, 1e-3)
    assert rec.k_hit == 1


def test_decay_batch_matches_single(rng):
    op = DeltaOperator(worked_example(), 0.25)
    X = rng.normal(size=(200, 3))
    recs = decay_test(op, X, 50, 1e-3)
    for j in range(3):
        np.testing.assert_allclose(recs[j].norms, decay_test(op, X[:, j], 50, 1e-3).norms, rtol=1e-13)


def test_decay_rejects_bad_arguments():
    op = DeltaOperator(scalar_system(), 0.1)
    with pytest.raises(ValueError):
        decay_test(op, [1.0], 0, 0.1)
    with pytest.raises(ValueError):
        decay_test(op, [1.0], 5, 1.0)


# ---- trajectory -------------------------------------------------------------------------

def test_trajectory_zero_feedback_is_pure_decay():
    op = DeltaOperator(scalar_system(-1.0, 1.0, 0.0), 0.5)
    tr = sampled_trajectory(op, [2.0], 8, 6)
    np.testing.assert_allclose(tr.norm, 2 * np.exp(-tr.t), rtol=1e-14)
    assert np.all(np.diff(tr.t) > 0)


def test_trajectory_dead_beat():
    op = DeltaOperator(scalar_system(), math.log(2))
    tr = sampled_trajectory(op, [1.0], 4, 3)
    after = tr.t >= math.log(2) - 1e-15
    assert np.all(tr.norm[after] == 0)


def test_trajectory_matches_power_and_is_continuous(rng):
    sys = random_system(rng, N=32)
    op = DeltaOperator(sys, 0.3)
    x0 = rng.normal(size=32) + 1j * rng.normal(size=32)
    tr = sampled_trajectory(op, x0, 5, 7)
    for k in range(8):
        assert np.array_equal(tr.samples[k], apply_delta_power(op, k, x0))
    # the k-th sampling instant in the series is the state produced by the step
    idx = np.arange(8) * 5
    np.testing.assert_allclose(tr.norm[idx], np.linalg.norm(tr.samples, axis=1), rtol=1e-15)
    # left limit at each instant approaches the sample value
    fine = sampled_trajectory(op, x0, 2000, 2)
    jump = abs(fine.norm[1999] - fine.norm[2000])
    assert jump < 1e-2 * fine.norm[2000]


# ---- sampling condition ------------------------------------------------------------------

def test_sampling_condition_cases():
    single = scalar_system(1.0, 1.0, -2.0)
    assert check_sampling_nonpathological(single, 0.5)
    pair = RieszSystem(SpectrumSpec([1 + 1j, 1 - 1j], 2), [1, 1], [0, 0])
    assert not check_sampling_nonpathological(pair, math.pi)
    assert check_sampling_nonpathological(pair, 1.0)

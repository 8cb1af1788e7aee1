from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hnmaxwell.prabhakar import KernelSpec, weights
from hnmaxwell.timestepper import (
    DenseOps,
    DirectHistory,
    FieldState,
    MediumParams,
    MemoryBudgetError,
    TimeStepper,
    energy,
    run,
)


def _scalar_ops():
    return DenseOps([[1.0]], [[1.0]], [[0.0]])


def _random_ops(rng, n_e=4, n_h=3):
    A = rng.standard_normal((n_e, n_e))
    B = rng.standard_normal((n_h, n_h))
    Me = A @ A.T + n_e * np.eye(n_e)
    Mh = B @ B.T + n_h * np.eye(n_h)
    C = rng.standard_normal((n_h, n_e))
    return DenseOps(Me, Mh, C)


def test_first_step_scalar_formula():
    med = MediumParams(1.5, 3.0, 0.5, 0.5)
    dt, v = 0.1, 2.0
    st_ = TimeStepper(_scalar_ops(), med, dt, 1)
    w0 = weights(med.kernel, dt, 2).w[0]
    out = st_.step(FieldState(np.array([v]), np.array([0.0]), np.array([0.0])))
    assert out.E[0] == pytest.approx(med.eps_inf * v / (med.eps_inf + med.delta_eps * w0), rel=1e-14)
    assert out.P[0] == pytest.approx(med.delta_eps * w0 * out.E[0], rel=1e-14)


def test_debye_case_follows_exponential_recursion():
    # For α = β = 1 the kernel is e^{-t}, so P^k = e^{-Δt} P^{k-1} + Δε (1 - e^{-Δt}) E^k.
    med = MediumParams(1.0, 4.0, 1.0, 1.0)
    dt = 0.2
    res = run(_scalar_ops(), med, dt, 30, np.array([1.0]), np.array([0.0]), snapshot_steps=range(31))
    for k in range(1, 31):
        a, b = res.snapshots[k - 1], res.snapshots[k]
        expect = math.exp(-dt) * a.P[0] + med.delta_eps * (1 - math.exp(-dt)) * b.E[0]
        assert b.P[0] == pytest.approx(expect, rel=1e-12, abs=1e-15)


def test_polarization_matches_recomputed_convolution():
    rng = np.random.default_rng(1)
    ops = _random_ops(rng)
    med = MediumParams(1.2, 2.5, 0.6, 0.8)
    n, dt = 40, 0.05
    res = run(ops, med, dt, n, rng.standard_normal(4), rng.standard_normal(3), snapshot_steps=range(n + 1))
    w = weights(med.kernel, dt, n + 1).w
    E = np.array([res.snapshots[j].E for j in range(1, n + 1)])
    P = med.delta_eps * (w[:n][::-1] @ E)
    np.testing.assert_allclose(res.final.P, P, rtol=1e-12, atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(
    alpha=st.floats(0.1, 0.95),
    beta=st.floats(0.1, 1.0),
    dt=st.floats(1e-3, 10.0),
    eps_inf=st.floats(1.0, 5.0),
    d_eps=st.floats(0.1, 50.0),
    seed=st.integers(0, 2**16),
)
def test_energy_nonincreasing_property(alpha, beta, dt, eps_inf, d_eps, seed):
    rng = np.random.default_rng(seed)
    ops = _random_ops(rng)
    med = MediumParams(eps_inf, eps_inf + d_eps, alpha, beta)
    res = run(ops, med, dt, 30, rng.standard_normal(4), rng.standard_normal(3))
    assert res.trace.is_nonincreasing(rtol=1e-12)
    assert res.polarization_bound_holds()


def test_energy_function_matches_trace():
    rng = np.random.default_rng(2)
    ops = _random_ops(rng)
    med = MediumParams(1.0, 2.0, 0.5, 0.5)
    res = run(ops, med, 0.1, 10, rng.standard_normal(4), np.zeros(3), snapshot_steps=range(11))
    norms = [ops.norm_e2(res.snapshots[j].E) for j in range(1, 11)]
    w = weights(med.kernel, 0.1, 11)
    val = energy(norms, res.final.E, res.final.H, w, med, ops)
    assert val == pytest.approx(res.trace.energy[-1], rel=1e-13)


def test_fast_mode_matches_direct_mode():
    rng = np.random.default_rng(4)
    ops = _random_ops(rng)
    med = MediumParams(1.0, 3.0, 0.4, 0.7)
    E0, H0 = rng.standard_normal(4), rng.standard_normal(3)
    a = run(ops, med, 0.01, 300, E0, H0, mode="direct").final
    b = run(ops, med, 0.01, 300, E0, H0, mode="fast").final
    for x, y in ((a.E, b.E), (a.H, b.H), (a.P, b.P)):
        assert np.max(np.abs(x - y)) <= 1e-10 * max(np.max(np.abs(x)), 1e-300)


def test_zero_initial_data_stays_zero():
    rng = np.random.default_rng(5)
    ops = _random_ops(rng)
    res = run(ops, MediumParams(1.0, 2.0, 0.5, 0.5), 0.1, 5, np.zeros(4), np.zeros(3))
    assert not np.any(res.final.E) and not np.any(res.final.H)


def test_memory_budget_guard():
    with pytest.raises(MemoryBudgetError):
        DirectHistory(np.ones(11), dof=100, nsteps=10, budget=999)
    with pytest.raises(MemoryBudgetError):
        TimeStepper(_scalar_ops(), MediumParams(1.0, 2.0, 0.5, 0.5), 0.1, 100, history_budget=10)


def test_argument_validation():
    med = MediumParams(1.0, 2.0, 0.5, 0.5)
    with pytest.raises(ValueError):
        TimeStepper(_scalar_ops(), med, 0.0, 3)
    with pytest.raises(ValueError):
        TimeStepper(_scalar_ops(), med, 0.1, 3, mode="trapezoid")
    with pytest.raises(ValueError):
        MediumParams(0.5, 2.0, 0.5, 0.5)
    with pytest.raises(ValueError):
        MediumParams(2.0, 2.0, 0.5, 0.5)
    with pytest.raises(ValueError):
        DenseOps(np.eye(2), np.eye(1), np.zeros((2, 2)))
    st_ = TimeStepper(_scalar_ops(), med, 0.1, 1)
    s1 = st_.step(FieldState(np.array([1.0]), np.array([0.0]), np.array([0.0])))
    with pytest.raises(ValueError):
        st_.step(s1)


def test_weights_override_is_used():
    med = MediumParams(1.0, 2.0, 0.5, 0.5)
    w = np.zeros(3)
    res = run(_scalar_ops(), med, 0.1, 2, np.array([1.0]), np.array([0.0]), stepper_kwargs={"weights_override": w})
    # no memory at all: E stays constant and P stays zero
    assert res.final.E[0] == pytest.approx(1.0) and res.final.P[0] == 0.0


def test_zero_steps_returns_initial_state():
    res = run(_scalar_ops(), MediumParams(1.0, 2.0, 0.5, 0.5), 0.1, 0, np.array([1.0]), np.array([0.0]))
    assert res.final.k == 0 and res.stepper is None and res.trace.energy == [1.0]

import math

import numpy as np
import pytest

import switchq


def test_builtin_models_solve():
    one = switchq.builtin_mdp("example1")
    q1 = switchq.solve_qstar(one)
    assert q1[0] == pytest.approx(10.0, abs=1e-9)

    three = switchq.builtin_mdp("example3")
    q3 = switchq.solve_qstar(three)
    assert q3 == pytest.approx([10.0, 9.0], abs=1e-9)

    two = switchq.builtin_mdp("paper2state")
    qp = switchq.solve_qstar(two)
    assert qp == pytest.approx(
        [11.974051385205255, 15.931425436590462, 17.760080460820141, 14.650141720763457],
        abs=1e-8,
    )
    assert switchq.greedy_policy(qp, 2, 2) == [1, 0]


def test_mdp_from_arrays_and_validation():
    mdp = switchq.Mdp(
        num_states=1,
        num_actions=2,
        discount=0.9,
        transition=np.ones((2, 1)),
        reward=np.array([[1.0], [0.0]]),
        behavior_policy=np.array([[0.5, 0.5]]),
        state_dist=np.array([1.0]),
    )
    assert mdp.visit_min == pytest.approx(0.5)
    with pytest.raises(ValueError):
        switchq.Mdp(
            num_states=1,
            num_actions=2,
            discount=0.9,
            transition=np.ones((2, 1)),
            reward=np.zeros((2, 1)),
            behavior_policy=np.array([[1.0, 0.0]]),  # zero-visit pair
            state_dist=np.array([1.0]),
        )


def test_cosimulation_sandwich_and_determinism():
    mdp = switchq.builtin_mdp("paper2state")
    rng = np.random.default_rng(0)
    q0 = rng.uniform(-1.0, 1.0, size=4)
    a = switchq.co_simulate(mdp, alpha=0.002, num_steps=5000, seed=11, q0=q0, record_stride=50)
    b = switchq.co_simulate(mdp, alpha=0.002, num_steps=5000, seed=11, q0=q0, record_stride=50)
    assert a["violation_count"] == 0
    qs = a["q_star"]
    assert np.all(a["q_lower"] - 1e-12 <= a["q"])
    assert np.all(a["q"] <= a["q_upper"] + 1e-12)
    assert np.array_equal(a["q"], b["q"])
    # The error channel shrinks over the run.
    gap_norm = np.abs(a["gap"]).max(axis=1)
    assert gap_norm[-1] < gap_norm.max()
    assert qs.shape == (4,)


def test_decay_rate_and_bounds():
    mdp = switchq.builtin_mdp("paper2state")
    assert switchq.decay_rate(mdp, 0.002) == pytest.approx(0.999992, abs=1e-12)
    w_inf, w_var = switchq.noise_bounds(mdp)
    assert w_inf == pytest.approx(40.0)
    assert w_var == pytest.approx(6400.0)
    b1 = switchq.theorem1_bound(mdp, alpha=0.002, num_steps=1000, e0_sq=350.0)
    b2 = switchq.theorem2_bound(mdp, alpha=0.002, num_steps=1000)
    assert b1 > 0 and b2 > 0
    assert switchq.theorem2_bound(mdp, 0.002, 10_000) <= b2


def test_lyapunov_certificate():
    mdp = switchq.builtin_mdp("example3")
    cert = switchq.lyapunov_certificate(mdp, alpha=0.1)
    assert cert["lambda_min"] >= 1.0 - 1e-9
    assert cert["lambda_max"] <= cert["lambda_max_bound"] + 1e-6
    assert cert["residual"] <= 1e-8
    assert cert["M"].shape == (2, 2)


def test_sample_complexity_scaling():
    mdp = switchq.builtin_mdp("paper2state")
    coarse = switchq.sample_complexity(mdp, accuracy=1.0, confidence=0.1)
    fine = switchq.sample_complexity(mdp, accuracy=0.5, confidence=0.1)
    assert coarse["phi1"] + coarse["phi2"] <= 0.1 + 1e-12
    assert fine["n_star"] / coarse["n_star"] == pytest.approx(16.0, rel=0.01)


def test_run_ensemble_and_verify():
    mdp = switchq.builtin_mdp("example3")
    stats = switchq.run_ensemble(
        mdp, alpha=0.1, num_steps=500, num_trials=8, base_seed=5, record_stride=50
    )
    assert stats["violation_count"] == 0
    assert stats["err_orig_mean"][-1] < stats["err_orig_mean"][0]

    report = switchq.verify_all(mdp, alpha=0.1, probe_count=50, seed=1)
    assert all(item["pass"] for item in report), [
        item["name"] for item in report if not item["pass"]
    ]


def test_random_mdp_reproducible():
    a = switchq.random_mdp(42)
    b = switchq.random_mdp(42)
    assert np.array_equal(a.transition, b.transition)
    assert a.visit_min > 0
    assert a.reward_bound <= 1.0


def test_paper_example_datasets(tmp_path):
    files = switchq.write_paper_example_datasets(
        str(tmp_path), seed=7, num_steps=2000, record_stride=100
    )
    assert len(files) == 4
    for f in files:
        text = open(f).read().splitlines()
        assert len(text) == 22  # header + 21 records
    assert math.isfinite(switchq.decay_rate(switchq.builtin_mdp("example1"), 0.5))

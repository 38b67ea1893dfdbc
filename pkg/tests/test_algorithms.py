"""Thresholding operators, the objective, and the solver loop."""

import math

import numpy as np
import pytest

from proxunfold.algorithms import (Regularizer, StepSchedule, hard_threshold,
                                   gradient_step, objective_value, run_solver,
                                   soft_threshold, threshold_cut)
from proxunfold.errors import DivergenceError
from proxunfold.problem import ProblemConfig, SparseProblem, generate_problem, lipschitz_constant


def _instance(n=24, m=16, p=0.2, snr_db=20.0, seed=0):
    config = ProblemConfig(n=n, m=m, p=p, snr_db=snr_db)
    return generate_problem(config, np.random.default_rng(seed))


# ---------------------------------------------------------------- thresholds

def test_soft_threshold_piecewise_values():
    assert soft_threshold(np.array([1.2]), 0.5)[0] == pytest.approx(0.7)
    assert soft_threshold(np.array([0.3]), 0.5)[0] == 0.0
    assert soft_threshold(np.array([-1.2]), 0.5)[0] == pytest.approx(-0.7)
    assert soft_threshold(np.array([0.5]), 0.5)[0] == 0.0  # dead zone is closed


def test_soft_threshold_rejects_negative_tau():
    with pytest.raises(ValueError):
        soft_threshold(np.array([1.0]), -0.1)


def test_hard_threshold_keep_drop_and_boundary():
    assert hard_threshold(np.array([1.2]), 0.5, 1.0, 0.0)[0] == 1.2
    assert hard_threshold(np.array([0.9]), 0.5, 1.0, 0.0)[0] == 0.0
    # exactly at the cut the entry is kept
    assert hard_threshold(np.array([1.0]), 0.5, 1.0, 0.0)[0] == 1.0
    assert hard_threshold(np.array([-1.0]), 0.5, 1.0, 0.0)[0] == -1.0


def test_hard_threshold_rejects_negative_radicand():
    with pytest.raises(ValueError):
        hard_threshold(np.array([1.0]), 0.5, -2.0, 0.0)


def test_soft_threshold_matches_bruteforce_prox():
    # argmin_u tau*|u| + 0.5*(u - v)^2 on a fine grid
    grid = np.arange(-3.0, 3.0 + 1e-9, 1e-4)
    for tau in (0.1, 0.5, 1.0):
        for v in np.linspace(-2, 2, 41):
            best = grid[np.argmin(tau * np.abs(grid) + 0.5 * (grid - v) ** 2)]
            assert abs(soft_threshold(np.array([v]), tau)[0] - best) <= 1e-3


def test_hard_threshold_matches_bruteforce_prox_away_from_boundary():
    # argmin_u tau*[u != 0] + 0.5*(u - v)^2; switch point at |v| = sqrt(2 tau).
    # The grid must contain u = 0 exactly or the zero candidate pays the penalty.
    grid = np.concatenate([np.arange(-3.0, 3.0 + 1e-9, 1e-4), [0.0]])
    for tau in (0.1, 0.5, 1.0):
        cut = math.sqrt(2.0 * tau)
        for v in np.linspace(-2, 2, 41):
            if abs(abs(v) - cut) < 1e-2:
                continue
            best = grid[np.argmin(tau * (grid != 0.0) + 0.5 * (grid - v) ** 2)]
            got = hard_threshold(np.array([v]), tau, 1.0, 0.0)[0]
            assert abs(got - best) <= 1e-3


def test_shrinkage_properties():
    rng = np.random.default_rng(2)
    v = rng.normal(scale=2.0, size=500)
    s = soft_threshold(v, 0.7)
    assert np.all(np.abs(s) <= np.abs(v))
    assert np.all((s == 0) | (np.sign(s) == np.sign(v)))
    h = hard_threshold(v, 0.3, 1.0)
    assert np.all((h == 0) | (h == v))


def test_threshold_cut_consistency():
    reg1 = Regularizer.l1(0.05)
    assert threshold_cut(reg1, 0.4) == pytest.approx(0.02)
    reg0 = Regularizer.l0(0.01)
    assert threshold_cut(reg0, 0.5) == pytest.approx(math.sqrt(0.01 + 1e-10))


# ------------------------------------------------------------ objective, step

def test_objective_zero_vector_is_half_norm_y():
    problem = _instance()
    reg = Regularizer.l1()
    want = 0.5 * float(problem.y @ problem.y)
    assert objective_value(np.zeros(problem.n), problem, reg) == pytest.approx(want)


def test_objective_l0_counts_exact_nonzeros():
    a = np.eye(4)
    x = np.array([1.0, -2.0, 0.0, 3.0])
    problem = SparseProblem(a=a, y=a @ x, x_true=x, sigma_v2=0.0)
    reg = Regularizer.l0(lam=0.25)
    assert objective_value(x, problem, reg) == pytest.approx(3 * 0.25)


def test_objective_l1_hand_value():
    problem = SparseProblem(a=np.eye(2), y=np.array([1.0, 0.0]),
                            x_true=np.array([1.0, 0.0]), sigma_v2=0.0)
    reg = Regularizer(kind="l1", lam=0.05)
    assert objective_value(np.array([0.5, 0.0]), problem, reg) == pytest.approx(0.15)


def test_gradient_step_cases():
    problem = _instance()
    x = np.random.default_rng(1).normal(size=problem.n)
    assert np.array_equal(gradient_step(x, problem, 0.0), x)
    # zero residual leaves x unchanged
    x_fit, *_ = np.linalg.lstsq(problem.a, problem.y, rcond=None)
    moved = gradient_step(x_fit, problem, 0.7)
    assert np.allclose(moved, x_fit, atol=1e-10)
    one_d = SparseProblem(a=np.array([[1.0]]), y=np.array([2.0]),
                          x_true=np.array([2.0]), sigma_v2=0.0)
    assert gradient_step(np.array([0.0]), one_d, 0.5)[0] == pytest.approx(1.0)


# ------------------------------------------------------------------- schedule

def test_constant_schedule_and_validation():
    sched = StepSchedule.constant(0.3, 5)
    assert len(sched) == 5
    assert np.all(sched.alphas == 0.3)
    with pytest.raises(ValueError):
        StepSchedule.constant(0.3, 0)
    with pytest.raises(ValueError):
        StepSchedule(np.zeros((2, 2)))


def test_schedule_csv_round_trip(tmp_path):
    sched = StepSchedule(np.array([0.1, 0.25, 1e-10, 0.5]))
    path = tmp_path / "schedule.csv"
    sched.save(path)
    back = StepSchedule.load(path)
    assert np.array_equal(back.alphas, sched.alphas)
    text = path.read_text()
    assert text.splitlines()[0] == "t,alpha"


def test_regularizer_validation_and_defaults():
    assert Regularizer.l1().lam == 0.05
    assert Regularizer.l0().lam == 0.01
    assert Regularizer.l0().epsilon_guard == 1e-10
    with pytest.raises(ValueError):
        Regularizer(kind="l2", lam=0.1)
    with pytest.raises(ValueError):
        Regularizer(kind="l1", lam=0.0)


# --------------------------------------------------------------------- solver

def test_zero_steps_trajectory_is_the_zero_start():
    problem = _instance()
    reg = Regularizer.l1()
    traj = run_solver(problem, StepSchedule.constant(0.1, 3), reg, t_steps=0)
    assert traj.objectives.shape == (1,)
    assert traj.objectives[0] == pytest.approx(0.5 * float(problem.y @ problem.y))
    assert np.all(traj.x_final == 0.0)


def test_monotone_descent_at_inverse_lipschitz():
    rng = np.random.default_rng(10)
    config = ProblemConfig(n=40, m=28, p=0.15, snr_db=20.0)
    for _ in range(20):
        problem = generate_problem(config, rng)
        alpha = 1.0 / lipschitz_constant(problem.a)
        traj = run_solver(problem, StepSchedule.constant(alpha, 60), Regularizer.l1())
        diffs = np.diff(traj.objectives)
        assert np.all(diffs <= 1e-12 * np.abs(traj.objectives[:-1]) + 1e-15)


def test_long_run_self_consistency_two_step_sizes():
    # the l1 problem has a unique-enough optimum: a long run at 1/L and a much
    # longer run at 1/(2L) must land at the same point
    problem = _instance(n=8, m=6, p=0.3, snr_db=25.0, seed=4)
    lip = lipschitz_constant(problem.a)
    reg = Regularizer.l1()
    fast = run_solver(problem, StepSchedule.constant(1.0 / lip, 10_000), reg,
                      record=False)
    slow = run_solver(problem, StepSchedule.constant(0.5 / lip, 500_000), reg,
                      record=False)
    assert np.linalg.norm(fast.x_final - slow.x_final) <= 1e-6


def test_fixed_point_is_left_unchanged():
    problem = _instance(n=10, m=7, p=0.3, snr_db=25.0, seed=8)
    lip = lipschitz_constant(problem.a)
    reg = Regularizer.l1()
    # converge to (numerically) the fixed point, then take one more step
    sched = StepSchedule.constant(1.0 / lip, 200_000)
    x_star = run_solver(problem, sched, reg, record=False).x_final
    r = gradient_step(x_star, problem, 1.0 / lip)
    again = soft_threshold(r, reg.lam / lip)
    assert np.allclose(again, x_star, atol=1e-10)


def test_divergence_raises_and_names_iteration():
    problem = _instance(n=30, m=20, seed=3)
    lip = lipschitz_constant(problem.a)
    huge = StepSchedule.constant(50.0 / lip, 2000)
    with pytest.raises(DivergenceError) as err:
        run_solver(problem, huge, Regularizer.l1())
    assert err.value.iteration >= 1
    assert str(err.value.iteration) in str(err.value)


def test_record_modes():
    problem = _instance()
    reg = Regularizer.l1()
    sched = StepSchedule.constant(0.05, 12)
    full = run_solver(problem, sched, reg, record="iterates")
    assert full.iterates.shape == (13, problem.n)
    assert np.array_equal(full.iterates[-1], full.x_final)
    assert np.all(full.iterates[0] == 0.0)
    finals_only = run_solver(problem, sched, reg, record=False)
    assert np.isnan(finals_only.objectives[0])
    assert finals_only.objectives[-1] == pytest.approx(full.objectives[-1])
    assert np.array_equal(finals_only.x_final, full.x_final)
    with pytest.raises(ValueError):
        run_solver(problem, sched, reg, record="everything")


def test_solver_requires_schedule_long_enough():
    problem = _instance()
    with pytest.raises(ValueError):
        run_solver(problem, StepSchedule.constant(0.1, 3), Regularizer.l1(), t_steps=4)


def test_trajectory_csv_export(tmp_path):
    problem = _instance()
    traj = run_solver(problem, StepSchedule.constant(0.05, 4), Regularizer.l1())
    path = tmp_path / "trajectory.csv"
    traj.save(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,objective,mse_db"
    assert len(lines) == 6
    t, obj, mse = lines[1].split(",")
    assert t == "0"
    assert float(obj) == pytest.approx(traj.objectives[0])
    assert float(mse) == pytest.approx(traj.mses[0])

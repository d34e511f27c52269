import math

import numpy as np
import pytest

from nslyap import geometry as geo
from nslyap import integrator as itg
from nslyap import lyapunov as ly
from nslyap import operators as ops
from nslyap.errors import BallNotInterior, OutsideDomain, StepTooLarge

from conftest import constrained_decay, decay, saturated_box, wall


def test_right_derivative_examples():
    assert itg.right_derivative(constrained_decay(), [0.0])[0] == 0.0
    one = itg.SystemSpec(ops.NormalConeOf(geo.nonneg_orthant(1)), itg.constant_drift([1.0]))
    assert itg.right_derivative(one, [0.0])[0] == 1.0
    two = itg.SystemSpec(ops.NormalConeOf(geo.nonneg_orthant(1)), itg.constant_drift([-2.0]))
    assert itg.right_derivative(two, [0.0])[0] == 0.0
    with pytest.raises(OutsideDomain):
        itg.right_derivative(two, [-1.0])


def test_step_examples():
    assert itg.step(decay(), [1.0], 0.1)[0] == pytest.approx(0.9)
    assert itg.step(wall(), [0.05], 0.1)[0] == 0.0
    lin = itg.SystemSpec(ops.Linear([[1.0]]), itg.constant_drift([0.0]))
    assert itg.step(lin, [1.0], 0.1)[0] == pytest.approx(1 / 1.1)


def test_simulate_examples():
    assert itg.simulate(decay(), [1.0], 1.0, 1e-3).final[0] == pytest.approx(math.exp(-1), abs=1e-3)
    still = itg.SystemSpec(ops.NormalConeOf(geo.Box([0.0], [1.0])), itg.constant_drift([0.0]))
    traj = itg.simulate(still, [0.5], 1.0, 1e-2)
    assert np.all(traj.states == 0.5)
    traj = itg.simulate(wall(), [0.5], 1.0, 1e-3)
    assert abs(traj.final[0]) <= 1e-3
    k = np.searchsorted(traj.times, 0.5)
    assert np.all(np.abs(traj.states[k + 1:, 0]) <= 1e-3)
    with pytest.raises(OutsideDomain, match="initial point outside domain"):
        itg.simulate(wall(), [-0.5], 1.0, 1e-3)
    with pytest.raises(StepTooLarge):
        itg.simulate(decay(), [1.0], 1.0, 0.5)


def test_every_state_in_domain(catalog_system):
    sys_, x0 = catalog_system
    traj = itg.simulate(sys_, x0, 1.0, 1e-2 if sys_.h_max >= 1e-2 else sys_.h_max)
    assert all(sys_.domain.contains(x, 0.0) or sys_.domain.contains(x, 1e-12) for x in traj.states)
    assert traj.residuals.max() <= 1e-8


def test_order_one():
    errs = [abs(itg.simulate(decay(), [1.0], 1.0, h).final[0] - math.exp(-1)) for h in (1e-2, 5e-3, 2.5e-3)]
    r1, r2 = errs[0] / errs[1], errs[1] / errs[2]
    assert 1.8 <= r1 <= 2.2 and 1.8 <= r2 <= 2.2


def test_semigroup():
    assert itg.check_semigroup(decay(), [1.0], 0.5, 0.5, 1e-3) <= 5e-3
    assert itg.check_semigroup(decay(), [1.0], 0.0, 0.5, 1e-3) == 0.0
    assert itg.check_semigroup(wall(), [0.5], 0.4, 0.4, 1e-3) <= 5e-3


def test_nonexpansive():
    lhs, rhs = itg.check_nonexpansive(decay(), [1.0], [0.5], 1.0, 1e-3)
    assert lhs == pytest.approx(0.5 * math.exp(-1), abs=1e-3) and lhs <= rhs
    assert itg.check_nonexpansive(decay(), [1.0], [1.0], 1.0, 1e-3)[0] == 0.0
    lhs, rhs = itg.check_nonexpansive(saturated_box(), [0.9, 0.9], [-0.5, 0.2], 1.0, 1e-3)
    assert lhs <= rhs


def test_local_bound_probe():
    M, ratio = itg.local_bound_probe(constrained_decay(), [1.0], 0.5, 20)
    assert M == pytest.approx(1.5) and ratio <= 1 + 1e-2
    const = itg.SystemSpec(ops.Zero(2), itg.constant_drift([3.0, 4.0]))
    M, ratio = itg.local_bound_probe(const, [0.0, 0.0], 1.0, 20)
    assert M == pytest.approx(5.0) and ratio <= 1.0 + 1e-12
    h = 1e-2
    M, ratio = itg.local_bound_probe(saturated_box(), [0.0, 0.0], 0.5, 200, h=h)
    assert ratio <= 1 + 10 * h
    with pytest.raises(BallNotInterior):
        itg.local_bound_probe(constrained_decay(), [0.2], 0.5, 5)


def test_energy_satisfies_gronwall():
    traj = itg.simulate(decay(), [1.0], 2.0, 1e-3)
    psi = np.sum(traj.states ** 2, axis=1)
    assert ly.verify_gronwall(traj.times, psi, -2.0, 0.0)


def test_csv_round_trip(tmp_path):
    traj = itg.simulate(saturated_box(), [0.9, -0.4], 0.05, 1e-2)
    path = tmp_path / "t.csv"
    traj.to_csv(path)
    header, rows = itg.read_trajectory_csv(path)
    assert header == ["t", "x_1", "x_2", "residual"]
    assert np.array_equal(rows[:, 1:3], traj.states)
    assert np.array_equal(rows[:, 0], traj.times)

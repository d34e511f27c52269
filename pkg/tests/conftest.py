import numpy as np
import pytest

from nslyap import functions as fn
from nslyap import geometry as geo
from nslyap import integrator as itg
from nslyap import lcs
from nslyap import operators as ops


def half_line():
    return geo.nonneg_orthant(1)


def decay():
    return itg.SystemSpec(ops.Zero(1), itg.AffineDrift([[-1.0]]))


def constrained_decay():
    return itg.SystemSpec(ops.NormalConeOf(half_line()), itg.AffineDrift([[-1.0]]))


def wall():
    # f = -1 pushes into the wall x = 0
    return itg.SystemSpec(ops.NormalConeOf(half_line()), itg.constant_drift([-1.0]))


def saturated_box():
    F = np.array([[-1.0, 2.0], [-2.0, -1.0]])
    return itg.SystemSpec(ops.NormalConeOf(geo.Box([-1.0, -1.0], [1.0, 1.0])),
                          itg.AffineDrift(F, nonlinearity="sat"))


def linear_plus_cone():
    A = ops.Sum(ops.Linear([[1.0, 0.5], [-0.5, 1.0]]), ops.NormalConeOf(geo.nonneg_orthant(2)))
    return itg.SystemSpec(A, itg.AffineDrift([[0.0, 1.0], [-1.0, 0.0]]))


def bridged():
    model = lcs.LCSSystem([[-1.0, 0.0], [1.0, -1.0]], np.eye(2), np.eye(2), np.zeros((2, 2)), [0.0, 1.0])
    return lcs.lcs_to_inclusion(model)


CATALOG = {
    "decay": (decay, [1.0]),
    "constrained_decay": (constrained_decay, [1.0]),
    "wall": (wall, [0.5]),
    "saturated_box": (saturated_box, [0.9, -0.4]),
    "linear_plus_cone": (linear_plus_cone, [0.5, 1.0]),
    "bridged": (bridged, [0.0, 1.0]),
}


@pytest.fixture(params=sorted(CATALOG))
def catalog_system(request):
    make, x0 = CATALOG[request.param]
    return make(), np.array(x0)


def half_x2():
    return fn.Quadratic(np.eye(1))

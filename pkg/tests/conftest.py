import math

import numpy as np
import pytest

from vesselsim.dynamics import (VesselParams, VesselState, ControlInput,
                                container_ship, tanker, step)


@pytest.fixture
def type1() -> VesselParams:
    return container_ship()


@pytest.fixture
def type2() -> VesselParams:
    return tanker()


def state(x=0.0, y=0.0, phi=0.0, v=0.0) -> VesselState:
    return VesselState(x=x, y=y, phi=phi, v=v)


def coast(s: VesselState, dt: float, params: VesselParams,
          n: int) -> VesselState:
    """Roll the plant forward n steps with zero input."""
    u = ControlInput(0.0, 0.0)
    for _ in range(n):
        s = step(s, u, dt, params)
    return s


def min_pair_distance(s_l: VesselState, s_m: VesselState, dt: float,
                      params_l: VesselParams, params_m: VesselParams,
                      horizon: float) -> float:
    """Closest centre distance when both vessels coast straight ahead.

    Independent many-small-steps check used as the ground truth for the
    conflict predicate: no cone algebra, just forward simulation.
    """
    steps = int(horizon / dt)
    t = dt * np.arange(steps + 1)
    px = s_l.x + t * s_l.v * math.cos(s_l.phi)
    py = s_l.y + t * s_l.v * math.sin(s_l.phi)
    qx = s_m.x + t * s_m.v * math.cos(s_m.phi)
    qy = s_m.y + t * s_m.v * math.sin(s_m.phi)
    return float(np.hypot(px - qx, py - qy).min())

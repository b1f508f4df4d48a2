"""Vessel state, parameters, yaw-constrained dynamics, and linearization.

State s = [x, y, phi, v]: position (m), heading (rad), speed over ground
(m/s). Input u = [a, omega]: longitudinal acceleration (m/s^2) and yaw rate
(rad/s). The continuous model is

    dx/dt = v cos(phi),  dy/dt = v sin(phi),  dphi/dt = omega,  dv/dt = a.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .geometry import wrap_angle

STATE_DIM = 4
INPUT_DIM = 2


@dataclass
class VesselState:
    x: float
    y: float
    phi: float
    v: float

    def __post_init__(self):
        self.phi = wrap_angle(self.phi)

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.phi, self.v])

    @classmethod
    def from_array(cls, arr) -> "VesselState":
        return cls(float(arr[0]), float(arr[1]), float(arr[2]), float(arr[3]))

    def copy(self) -> "VesselState":
        return VesselState(self.x, self.y, self.phi, self.v)


@dataclass
class ControlInput:
    a: float = 0.0
    omega: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.omega])

    @classmethod
    def from_array(cls, arr) -> "ControlInput":
        return cls(float(arr[0]), float(arr[1]))


@dataclass
class VesselParams:
    """Physical limits plus all rule-reaction and tracking parameters.

    Derived distances default to the standard formulas based on hull size
    and maneuverability; pass explicit values to override.
    """

    v_max: float
    v_des: float
    omega_max: float
    a_max: float
    length: float
    width: float
    dt: float = 1.0
    horizon: int = 90            # MPC prediction horizon, steps of dt
    # input regularization: the pure tracking cost admits zero-cost
    # sample-synchronized weaving about a straight leg, which never settles
    # the heading; a small quadratic input cost selects the straight motion
    rho_u: float = 25.0

    # head-on reaction
    alpha_h1: float = 0.8
    d_h1: float | None = None    # l + w
    d_h2: float | None = None    # 2 l
    # crossing reaction
    alpha_c1: float = 0.785
    d_c1: float | None = None    # 1.5 alpha_c1 v_des / omega_max
    d_c2: float | None = None    # 2 l
    d_c3: float | None = None    # 2 l + 2 w
    # overtaking reaction
    alpha_o1: float = 0.261
    d_o1: float | None = None    # 2 l + 2 w
    d_o2: float | None = None    # 2 l
    # steady-course detection
    t_so: float | None = None    # 10 dt
    alpha_so: float = 0.005
    # waypoint consumption
    d_wp: float | None = None    # 0.5 l
    d_term: float | None = None  # 0.25 l

    # encounter detection
    t_horizon: float = 420.0
    t_horizon_check: float | None = None
    delta_head_on: float = math.radians(10.0)
    speed_factor: float = 1.1
    t_react: float = 30.0
    d_guide: float = 1.0e6

    def __post_init__(self):
        l, w = self.length, self.width
        if self.d_h1 is None:
            self.d_h1 = l + w
        if self.d_h2 is None:
            self.d_h2 = 2.0 * l
        if self.d_c1 is None:
            self.d_c1 = 1.5 * self.alpha_c1 * self.v_des / self.omega_max
        if self.d_c2 is None:
            self.d_c2 = 2.0 * l
        if self.d_c3 is None:
            self.d_c3 = 2.0 * l + 2.0 * w
        if self.d_o1 is None:
            self.d_o1 = 2.0 * l + 2.0 * w
        if self.d_o2 is None:
            self.d_o2 = 2.0 * l
        if self.t_so is None:
            self.t_so = 10.0 * self.dt
        if self.d_wp is None:
            self.d_wp = 0.5 * l
        if self.d_term is None:
            self.d_term = 0.25 * l
        if self.t_horizon_check is None:
            self.t_horizon_check = self.t_horizon
        self._validate()

    def _validate(self):
        if min(self.v_max, self.omega_max, self.a_max, self.length,
               self.width, self.dt) <= 0:
            raise ValueError("vessel limits and hull size must be positive")
        if not 0 < self.v_des <= self.v_max:
            raise ValueError("v_des must be in (0, v_max]")
        if self.horizon < 1:
            raise ValueError("horizon must be at least one step")
        if min(self.t_horizon, self.t_horizon_check, self.t_react) <= 0:
            raise ValueError("time parameters must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "VesselParams":
        return cls(**d)


def container_ship(**overrides) -> VesselParams:
    """Type 1 preset: 175 m container ship."""
    base = dict(v_max=16.8, v_des=8.4, omega_max=0.03, a_max=0.24,
                length=175.0, width=25.4)
    base.update(overrides)
    return VesselParams(**base)


def tanker(**overrides) -> VesselParams:
    """Type 2 preset: 304.8 m tanker."""
    base = dict(v_max=7.02, v_des=7.02, omega_max=0.0078, a_max=0.0127,
                length=304.8, width=32.0)
    base.update(overrides)
    return VesselParams(**base)


VESSEL_TYPES = {"type1": container_ship, "type2": tanker}


def _f(s: np.ndarray, u: np.ndarray) -> np.ndarray:
    return np.array([math.cos(s[2]) * s[3],
                     math.sin(s[2]) * s[3],
                     u[1],
                     u[0]])


def derivative(state: VesselState, control: ControlInput) -> np.ndarray:
    """Continuous-time state derivative [dx, dy, dphi, dv]."""
    return _f(state.as_array(), control.as_array())


def step(state: VesselState, control: ControlInput, dt: float,
         params: VesselParams) -> VesselState:
    """One RK4 integration step; speed clamped to [0, v_max], heading wrapped."""
    s = state.as_array()
    u = control.as_array()
    k1 = _f(s, u)
    k2 = _f(s + 0.5 * dt * k1, u)
    k3 = _f(s + 0.5 * dt * k2, u)
    k4 = _f(s + dt * k3, u)
    out = s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    out[2] = wrap_angle(out[2])
    out[3] = min(max(out[3], 0.0), params.v_max)
    return VesselState.from_array(out)


@dataclass
class LinearDiscreteModel:
    """Discrete affine model s+ = A s + B u + c around a linearization point."""

    A: np.ndarray
    B: np.ndarray
    c: np.ndarray
    dt: float


def linearize_discretize(state: VesselState, control: ControlInput,
                         dt: float) -> LinearDiscreteModel:
    """First-order Taylor + forward Euler discretization at (state, control)."""
    s = state.as_array()
    u = control.as_array()
    sin_phi = math.sin(s[2])
    cos_phi = math.cos(s[2])
    A_c = np.zeros((STATE_DIM, STATE_DIM))
    A_c[0, 2] = -s[3] * sin_phi
    A_c[0, 3] = cos_phi
    A_c[1, 2] = s[3] * cos_phi
    A_c[1, 3] = sin_phi
    B_c = np.zeros((STATE_DIM, INPUT_DIM))
    B_c[2, 1] = 1.0
    B_c[3, 0] = 1.0
    A = np.eye(STATE_DIM) + dt * A_c
    B = dt * B_c
    c = dt * (_f(s, u) - A_c @ s - B_c @ u)
    return LinearDiscreteModel(A=A, B=B, c=c, dt=dt)

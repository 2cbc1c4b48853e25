"""Nonlinear plant models written in control-affine form.

Every plant exposes ``decompose(x) -> (f, g)`` so that the highest state
derivative reads ``f(x) + g(x) * u (+ d)``.  Second-order plants carry
``x = (position, velocity)``; the conical tank carries ``x = (level,)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

LPH_TO_CM3_PER_S = 1000.0 / 3600.0


class SingularDynamicsError(ArithmeticError):
    """The pendulum mass-matrix denominator vanished."""


class DegenerateLevelError(ValueError):
    """Tank level below the floor where the cone cross-section collapses."""


@dataclass(frozen=True)
class PendulumParams:
    cart_mass: float = 1.0
    pend_mass: float = 0.1
    inertia: float = 0.006
    length: float = 0.3
    gravity: float = 9.8
    friction: float = 0.0

    def __post_init__(self):
        for name in ("cart_mass", "pend_mass", "inertia", "length", "gravity"):
            if not getattr(self, name) > 0:
                raise ValueError(f"pendulum {name} must be positive")
        if self.friction < 0:
            raise ValueError("pendulum friction must be non-negative")


@dataclass(frozen=True)
class VanDerPolParams:
    stiffness: float = 2.0
    damping_gain: float = 3.0

    def __post_init__(self):
        if not (self.stiffness > 0 and self.damping_gain > 0):
            raise ValueError("Van der Pol coefficients must be positive")


@dataclass(frozen=True)
class TankParams:
    top_radius: float = 17.5       # cm
    max_height: float = 70.0       # cm
    discharge_coeff: float = 55.0  # cm^2.5/s
    max_inflow: float = 400.0      # L/h
    min_level: float = 0.1         # cm

    def __post_init__(self):
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ValueError(f"tank {f.name} must be positive")


@dataclass(frozen=True)
class DisturbanceSpec:
    """Additive disturbance on the acceleration (or level-rate) channel.

    ``variant`` is ``"none"``, ``"sinusoid"`` or ``"impulse"``.  An impulse
    of ``area`` is realised as a rectangle of height ``area/period`` over one control period.
    """

    variant: str = "none"
    amplitude: float = 0.0
    angular_freq: float = 1.0
    area: float = 0.0
    fire_time: float = 0.0

    def __post_init__(self):
        if self.variant not in ("none", "sinusoid", "impulse"):
            raise ValueError(f"unknown disturbance variant {self.variant!r}")
        if not math.isfinite(self.area):
            raise ValueError("impulse area must be finite")

    @property
    def d_max(self) -> float:
        if self.variant == "sinusoid":
            return abs(self.amplitude)
        return 0.0 if self.variant == "none" else math.inf

    @classmethod
    def scaled_impulse(cls, weight: float, time_scale: float, fire_time: float = 0.0):
        """``weight * delta(time_scale * t)`` equals ``weight/|time_scale| * delta(t)``."""
        return cls("impulse", area=weight / abs(time_scale), fire_time=fire_time)


def pendulum_denominator(theta: float, p: PendulumParams) -> float:
    ml = p.pend_mass * p.length
    return ml * ml * math.cos(theta) ** 2 - (p.inertia + p.pend_mass * p.length**2)


def pendulum_decompose(state, params: PendulumParams) -> tuple[float, float]:
    theta, omega = state[0], state[1]
    den = pendulum_denominator(theta, params)
    if abs(den) < 1e-12:
        raise SingularDynamicsError(f"pendulum denominator {den:g} at theta={theta:g}")
    m, l = params.pend_mass, params.length
    s, c = math.sin(theta), math.cos(theta)
    f = (m * params.gravity * l * s - m * m * l * l * c * s * omega * omega) / den
    g = m * l * c / den
    return f, g


def vdp_decompose(state, params: VanDerPolParams) -> tuple[float, float]:
    x1, x2 = state[0], state[1]
    return -params.stiffness * x1 + params.damping_gain * (1.0 - x1 * x1) * x2, 1.0


def tank_area(h: float, params: TankParams) -> float:
    return math.pi * params.top_radius**2 * h * h / params.max_height**2


def tank_decompose(state, params: TankParams) -> tuple[float, float]:
    """Level dynamics with the inflow expressed in L/h.

    ``f`` is the drain rate in cm/s; ``g`` converts L/h of inflow into cm/s.
    """
    h = state[0]
    if h < params.min_level:
        raise DegenerateLevelError(f"level {h:g} cm below floor {params.min_level:g} cm")
    area = tank_area(h, params)
    return -params.discharge_coeff * math.sqrt(h) / area, LPH_TO_CM3_PER_S / area


def disturbance_eval(spec: DisturbanceSpec, t: float, dt: float) -> float:
    if dt <= 0:
        raise ValueError("dt must be positive")
    if spec.variant == "sinusoid":
        return spec.amplitude * math.sin(spec.angular_freq * t)
    if spec.variant == "impulse":
        # the step [t, t + dt) containing fire_time carries the whole area; the
        # small shift keeps grid-point fire times from slipping between steps
        eps = 1e-9 * dt
        if t - eps <= spec.fire_time < t + dt - eps:
            return spec.area / dt
        return 0.0
    return 0.0


@dataclass(frozen=True)
class Plant:
    """A plant model bundled with its parameters.

    ``kind`` is one of ``"pendulum"``, ``"vdp"`` or ``"tank"``.
    """

    kind: str
    params: object = field(default=None)

    def __post_init__(self):
        defaults = {"pendulum": PendulumParams, "vdp": VanDerPolParams, "tank": TankParams}
        if self.kind not in defaults:
            raise ValueError(f"unknown plant kind {self.kind!r}")
        if self.params is None:
            object.__setattr__(self, "params", defaults[self.kind]())

    @property
    def order(self) -> int:
        return 1 if self.kind == "tank" else 2

    def decompose(self, x) -> tuple[float, float]:
        if self.kind == "pendulum":
            return pendulum_decompose(x, self.params)
        if self.kind == "vdp":
            return vdp_decompose(x, self.params)
        return tank_decompose(x, self.params)

    def dynamics(self, x, u: float, d: float = 0.0) -> list[float]:
        """State derivative for input ``u`` and matched disturbance ``d``."""
        if self.kind == "tank":
            h = max(x[0], self.params.min_level)
            f, g = tank_decompose((h,), self.params)
            return [f + g * u + d]
        f, g = self.decompose(x)
        return [x[1], f + g * u + d]

    def perturbed(self, fractions: dict[str, float]) -> "Plant":
        """Copy with selected parameters scaled by ``1 + fraction``."""
        names = {f.name for f in fields(self.params)}
        bad = set(fractions) - names
        if bad:
            raise ValueError(f"cannot perturb unknown {self.kind} parameter(s): {sorted(bad)}")
        scaled = {k: getattr(self.params, k) * (1.0 + v) for k, v in fractions.items()}
        return Plant(self.kind, replace(self.params, **scaled))

    def as_array(self) -> list[float]:
        """Flat parameter vector in declaration order (kernel layout)."""
        return [float(getattr(self.params, f.name)) for f in fields(self.params)]

"""Sliding surfaces built from the tracking error and its derivatives."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SURFACE_KINDS = ("pid", "pi", "pd", "lambda")


class GainError(ValueError):
    pass


@dataclass(frozen=True)
class SurfaceGains:
    Kp: float = 0.0
    Ki: float = 0.0
    Kd: float = 0.0
    lam: float = 0.0

    def require(self, *names: str) -> None:
        for name in names:
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise GainError(f"surface gain {name} must be positive, got {value!r}")


@dataclass
class ErrorState:
    """Tracking error ``e = r - y`` with its derivatives and running integral."""

    e: float = 0.0
    e_dot: float = 0.0
    e_int: float = 0.0
    e_ddot: float = 0.0

    def as_vector(self) -> np.ndarray:
        return np.array([self.e, self.e_dot, self.e_int, self.e_ddot])


@dataclass(frozen=True)
class ReferenceSignal:
    """Constant or sinusoidal reference with exact derivatives."""

    variant: str = "constant"
    value: float = 0.0
    amplitude: float = 0.0
    angular_freq: float = 1.0

    def __post_init__(self):
        if self.variant not in ("constant", "sinusoid"):
            raise ValueError(f"unknown reference variant {self.variant!r}")

    def __call__(self, t: float) -> tuple[float, float, float]:
        """Return ``(r, r_dot, r_ddot)`` at time ``t``."""
        if self.variant == "constant":
            return self.value, 0.0, 0.0
        a, w = self.amplitude, self.angular_freq
        s, c = math.sin(w * t), math.cos(w * t)
        return self.value + a * s, a * w * c, -a * w * w * s


def pid_surface(gains: SurfaceGains, err: ErrorState) -> tuple[float, float]:
    gains.require("Kp", "Ki", "Kd")
    s = gains.Kp * err.e + gains.Kd * err.e_dot + gains.Ki * err.e_int
    s_dot = gains.Ki * err.e + gains.Kp * err.e_dot + gains.Kd * err.e_ddot
    return s, s_dot


def pi_surface(gains: SurfaceGains, err: ErrorState) -> tuple[float, float, float]:
    gains.require("Kp", "Ki")
    s = gains.Kp * err.e + gains.Ki * err.e_int
    s_dot = gains.Kp * err.e_dot + gains.Ki * err.e
    s_ddot = gains.Kp * err.e_ddot + gains.Ki * err.e_dot
    return s, s_dot, s_ddot


def pd_surface(gains: SurfaceGains, err: ErrorState) -> tuple[float, float]:
    """PD surface with the derivative gain pinned to one."""
    gains.require("Kp")
    return gains.Kp * err.e + err.e_dot, gains.Kp * err.e_dot + err.e_ddot


def lambda_surface(gains: SurfaceGains, err: ErrorState, order: int = 2) -> float:
    gains.require("lam")
    lam = gains.lam
    if order == 2:
        return err.e_dot + lam * err.e
    if order == 3:
        return err.e_ddot + 2.0 * lam * err.e_dot + lam * lam * err.e
    raise ValueError(f"unsupported surface order {order}; expected 2 or 3")


def is_hurwitz(coeffs) -> bool:
    """True when every root of the polynomial has negative real part."""
    roots = np.roots(np.asarray(coeffs, dtype=float))
    return bool(np.all(roots.real < 0))


def pid_error_polynomial(gains: SurfaceGains) -> tuple[float, float, float]:
    """On ``s = 0`` the error obeys ``Kd r^2 + Kp r + Ki = 0``."""
    return gains.Kd, gains.Kp, gains.Ki


def trapezoid_update(e_int: float, e_prev: float, e_now: float, dt: float) -> float:
    return e_int + 0.5 * (e_prev + e_now) * dt

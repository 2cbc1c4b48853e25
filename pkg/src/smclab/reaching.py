"""Reaching laws and switching functions.

All first-order laws in the family share the template

    s_dot = -k * s - eps * |s|**alpha * switch(s)

so :class:`ReachingLawSpec` reduces each named variant to the triple
``(k, eps, alpha)``.  The second-order law additionally acts on ``s_dot``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

FIRST_ORDER_VARIANTS = (
    "constant_rate",
    "exponential",
    "power_rate",
    "power_rate_exponential",
    "pd_modified",
)
VARIANTS = FIRST_ORDER_VARIANTS + ("second_order_modified",)


def sign(s: float) -> float:
    if s > 0:
        return 1.0
    if s < 0:
        return -1.0
    return 0.0


def sat(s: float, delta: float) -> float:
    if delta <= 0:
        raise ValueError("boundary width must be positive")
    if s > delta:
        return 1.0
    if s < -delta:
        return -1.0
    return s / delta


def abs_pow(s: float, alpha: float) -> float:
    """``|s|**alpha`` with the origin pinned to zero (no NaN for fractional alpha)."""
    if s == 0:
        return 0.0
    return math.exp(alpha * math.log(abs(s)))


def constant_rate(s: float, eps: float) -> float:
    return -eps * sign(s)


def exponential_law(s: float, eps: float, k: float) -> float:
    return -eps * sign(s) - k * s


def power_rate(s: float, k: float, alpha: float) -> float:
    return -k * abs_pow(s, alpha) * sign(s)


def power_rate_exponential(s: float, k: float, k_sc: float, alpha: float, delta: float) -> float:
    return -k * s - k_sc * abs_pow(s, alpha) * sat(s, delta)


def pd_modified(s: float, k1: float, eps1: float, alpha: float) -> float:
    return -k1 * s - eps1 * abs_pow(s, alpha) * sign(s)


def second_order_modified(s, s_dot, k1, k2, eps1, eps2, alpha) -> float:
    p = abs_pow(s, alpha)
    return -k1 * s_dot - k2 * s - eps1 * p * sign(s) - eps2 * p * sign(s_dot)


@dataclass(frozen=True)
class ReachingLawSpec:
    variant: str = "power_rate_exponential"
    eps: float = 1.0
    k: float = 1.0
    k_sc: float = 1.0
    alpha: float = 0.5
    k1: float = 1.0
    k2: float = 1.0
    eps1: float = 1.0
    eps2: float = 1.0
    boundary_width: float = 0.05
    switch_fn: str | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown reaching law {self.variant!r}")
        if self.switch_fn is None:
            default = "sat" if self.variant == "power_rate_exponential" else "sign"
            object.__setattr__(self, "switch_fn", default)
        if self.switch_fn not in ("sign", "sat"):
            raise ValueError(f"switch_fn must be 'sign' or 'sat', got {self.switch_fn!r}")
        if not self.boundary_width > 0:
            raise ValueError("boundary_width must be positive")
        used = {
            "constant_rate": ("eps",),
            "exponential": ("eps", "k"),
            "power_rate": ("k",),
            "power_rate_exponential": ("k", "k_sc"),
            "pd_modified": ("k1", "eps1"),
            "second_order_modified": ("k1", "k2", "eps1", "eps2"),
        }[self.variant]
        for name in used:
            if not getattr(self, name) > 0:
                raise ValueError(f"{self.variant}: {name} must be positive")
        if self.variant == "power_rate":
            if not 0 < self.alpha < 1:
                raise ValueError("power_rate needs 0 < alpha < 1")
        elif self.variant != "constant_rate" and self.variant != "exponential":
            if not 0 <= self.alpha <= 2:
                raise ValueError("alpha must lie in [0, 2]")

    @property
    def order(self) -> int:
        return 2 if self.variant == "second_order_modified" else 1

    def terms(self) -> tuple[float, float, float]:
        """``(k, eps, alpha)`` of the shared first-order template."""
        v = self.variant
        if v == "constant_rate":
            return 0.0, self.eps, 0.0
        if v == "exponential":
            return self.k, self.eps, 0.0
        if v == "power_rate":
            return 0.0, self.k, self.alpha
        if v == "power_rate_exponential":
            return self.k, self.k_sc, self.alpha
        if v == "pd_modified":
            return self.k1, self.eps1, self.alpha
        raise ValueError("second-order law has no first-order template")

    def switch(self, s: float) -> float:
        return sat(s, self.boundary_width) if self.switch_fn == "sat" else sign(s)

    def __call__(self, s: float, s_dot: float = 0.0) -> float:
        """Demanded ``s_dot`` (first order) or ``s_ddot`` (second order)."""
        if self.order == 2:
            p = abs_pow(s, self.alpha)
            return (-self.k1 * s_dot - self.k2 * s
                    - self.eps1 * p * self.switch(s) - self.eps2 * p * self.switch(s_dot))
        k, eps, alpha = self.terms()
        return -k * s - eps * abs_pow(s, alpha) * self.switch(s)

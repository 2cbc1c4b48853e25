"""Closed-form sliding-mode control laws.

Every law solves the surface dynamics algebraically for ``u`` so that the
nominal closed loop reproduces the chosen reaching law exactly.  Second-order
plants are written ``y'' = f + g u``; the tank is first order, ``y' = f + g u``.

``ref_deriv`` below is the reference derivative matching the plant's relative
degree: ``r''`` for second-order plants and ``r'`` for the tank.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .reaching import ReachingLawSpec, sign
from .surfaces import ErrorState, GainError, SurfaceGains, pd_surface, pi_surface, pid_surface

G_FLOOR = 1e-9

CONTROLLER_KINDS = (
    "equivalent",
    "pid_smc",
    "classical_smc",
    "pi_2smc",
    "pd_smc",
    "pi_pd_composite",
    "pid",
)

# reaching laws each kind accepts; ``None`` allowed for the bare equivalent control
_LAWS = {
    "equivalent": ("constant_rate", "exponential", None),
    "pid_smc": ("power_rate_exponential", "power_rate"),
    "classical_smc": ("exponential", "constant_rate", "power_rate_exponential"),
    "pi_2smc": ("second_order_modified",),
    "pd_smc": ("pd_modified",),
    "pi_pd_composite": ("second_order_modified",),
    "pid": (None,),
}


class ControllerSingularityError(ArithmeticError):
    """The effective input gain fell below ``g_floor``."""

    def __init__(self, message: str, gain: float):
        super().__init__(message)
        self.gain = gain


@dataclass(frozen=True)
class ControllerSpec:
    """Controller selection plus every gain it needs.

    For ``pi_pd_composite`` the PI branch uses ``surface``/``law`` and the PD
    branch uses ``pd_surface``/``pd_law``; ``gamma`` blends the two.
    """

    kind: str
    surface: SurfaceGains = field(default_factory=SurfaceGains)
    law: ReachingLawSpec | None = None
    u_limit: float | None = None
    g_floor: float = G_FLOOR
    pd_surface: SurfaceGains | None = None
    pd_law: ReachingLawSpec | None = None
    gamma: float = 0.9

    def __post_init__(self):
        if self.kind not in CONTROLLER_KINDS:
            raise ValueError(f"unknown controller kind {self.kind!r}")
        variant = None if self.law is None else self.law.variant
        if variant not in _LAWS[self.kind]:
            raise ValueError(f"{self.kind} cannot use reaching law {variant!r}")
        if self.u_limit is not None and not self.u_limit > 0:
            raise ValueError("u_limit must be positive when given")
        if not self.g_floor >= 0:
            raise ValueError("g_floor must be non-negative")
        need = {
            "equivalent": ("Kp", "Ki", "Kd"),
            "pid_smc": ("Kp", "Ki", "Kd"),
            "pid": ("Kp", "Ki", "Kd"),
            "classical_smc": ("lam",),
            "pi_2smc": ("Kp", "Ki"),
            "pi_pd_composite": ("Kp", "Ki"),
            "pd_smc": ("Kp",),
        }[self.kind]
        self.surface.require(*need)
        if self.kind == "pi_pd_composite":
            if self.pd_surface is None or self.pd_law is None:
                raise ValueError("pi_pd_composite needs pd_surface and pd_law")
            if self.pd_law.variant != "pd_modified":
                raise ValueError("composite PD branch needs the pd_modified law")
            self.pd_surface.require("Kp")
            if not 0 <= self.gamma <= 1:
                raise ValueError("gamma must lie in [0, 1]")

    @property
    def order(self) -> int:
        """Order of the surface dynamics the Lyapunov monitor tracks."""
        return 2 if self.kind in ("pi_2smc", "pi_pd_composite") else 1


@dataclass
class ControlOutput:
    u: float
    s: float
    s_dot: float
    V: float
    u_eq: float
    u_sw: float
    clipped: bool = False
    components: dict = field(default_factory=dict)


def _invert(numerator: float, gain: float, g_floor: float, label: str) -> float:
    if not abs(gain) > g_floor:
        raise ControllerSingularityError(f"{label}: input gain {gain:.3g} within g_floor", gain)
    return numerator / gain


def _finish(u_eq, u_sw, s, s_dot, V, u_limit, components=None) -> ControlOutput:
    u = u_eq + u_sw
    if not math.isfinite(u):
        raise ControllerSingularityError(f"non-finite control {u!r}", 0.0)
    clipped = False
    if u_limit is not None and abs(u) > u_limit:
        u = math.copysign(u_limit, u)
        u_sw = u - u_eq
        clipped = True
    return ControlOutput(u, s, s_dot, V, u_eq, u_sw, clipped, components or {})


def equivalent_control(err: ErrorState, ref_deriv: float, f: float, g: float,
                       gains: SurfaceGains, g_floor: float = G_FLOOR) -> float:
    """Control that keeps the PID surface rate at zero under nominal dynamics."""
    gains.require("Kp", "Ki", "Kd")
    x = gains.Ki * err.e + gains.Kp * err.e_dot + gains.Kd * (ref_deriv - f)
    return _invert(x, gains.Kd * g, g_floor, "equivalent control")


def pid_smc_control(err, ref_deriv, f, g, gains: SurfaceGains, law: ReachingLawSpec,
                    u_limit=None, g_floor=G_FLOOR) -> ControlOutput:
    """PID surface driven by a first-order reaching law.

    The reaching part is ``-(law(s)) / (Kd g)``, added to the equivalent control.
    """
    u_eq = equivalent_control(err, ref_deriv, f, g, gains, g_floor)
    s = gains.Kp * err.e + gains.Kd * err.e_dot + gains.Ki * err.e_int
    demand = law(s)
    u_sw = -demand / (gains.Kd * g)
    return _finish(u_eq, u_sw, s, demand, 0.5 * s * s, u_limit)


def pi_smc_first_order(err, ref_deriv, f, g, gains: SurfaceGains, law: ReachingLawSpec | None,
                       u_limit=None, g_floor=G_FLOOR) -> ControlOutput:
    """PI surface on a first-order plant; ``ref_deriv`` is ``r'``."""
    gains.require("Kp", "Ki")
    s = gains.Kp * err.e + gains.Ki * err.e_int
    x = gains.Kp * (ref_deriv - f) + gains.Ki * err.e
    kg = gains.Kp * g
    u_eq = _invert(x, kg, g_floor, "first-order PI-SMC")
    demand = 0.0 if law is None else law(s)
    return _finish(u_eq, -demand / kg, s, demand, 0.5 * s * s, u_limit)


def classical_smc_control(err, ref_deriv, f, g, lam: float, law: ReachingLawSpec,
                          u_limit=None, g_floor=G_FLOOR) -> ControlOutput:
    """Baseline SMC on ``s = e' + lam e``."""
    if not lam > 0:
        raise GainError("lam must be positive")
    s = err.e_dot + lam * err.e
    u_eq = _invert(lam * err.e_dot + ref_deriv - f, g, g_floor, "classical SMC")
    demand = law(s)
    return _finish(u_eq, -demand / g, s, demand, 0.5 * s * s, u_limit)


def pi_2smc_control(err, ref_deriv, f, g, gains: SurfaceGains, law: ReachingLawSpec,
                    u_limit=None, g_floor=G_FLOOR) -> ControlOutput:
    """Second-order SMC on the PI surface: the law prescribes ``s''``."""
    s, s_dot, _ = pi_surface(gains, err)
    kg = gains.Kp * g
    u_eq = _invert(gains.Kp * (ref_deriv - f) + gains.Ki * err.e_dot, kg, g_floor, "PI-2SMC")
    demand = law(s, s_dot)
    out = _finish(u_eq, -demand / kg, s, s_dot, 0.5 * (s * s + s_dot * s_dot), u_limit)
    out.components["s_ddot"] = demand
    return out


def pd_smc_control(err, ref_deriv, f, g, Kp: float, law: ReachingLawSpec,
                   u_limit=None, g_floor=G_FLOOR) -> ControlOutput:
    """First-order SMC on the PD surface ``s = Kp e + e'``."""
    if not Kp > 0:
        raise GainError("Kp must be positive")
    s = Kp * err.e + err.e_dot
    u_eq = _invert(Kp * err.e_dot + ref_deriv - f, g, g_floor, "PD-SMC")
    demand = law(s)
    return _finish(u_eq, -demand / g, s, demand, 0.5 * s * s, u_limit)


def pi_pd_composite(err, ref_deriv, f, g, pi_gains, pi_law, pd_Kp, pd_law,
                    gamma: float = 0.9, u_limit=None, g_floor=G_FLOOR) -> ControlOutput:
    """PI-2SMC with a PD-SMC feedback path, ``u = u_pi - gamma (u_pi - u_pd)``.

    ``gamma = 0`` is the bare PI-2SMC; ``gamma = 1`` hands control to the PD path.
    """
    pi = pi_2smc_control(err, ref_deriv, f, g, pi_gains, pi_law, None, g_floor)
    pd = pd_smc_control(err, ref_deriv, f, g, pd_Kp, pd_law, None, g_floor)
    u_eq = pi.u_eq - gamma * (pi.u_eq - pd.u_eq)
    u_sw = pi.u_sw - gamma * (pi.u_sw - pd.u_sw)
    comps = {"u_pi": pi.u, "u_pd": pd.u, "s_pd": pd.s, "s_ddot": pi.components["s_ddot"]}
    return _finish(u_eq, u_sw, pi.s, pi.s_dot, pi.V, u_limit, comps)


def pid_control(err, g, gains: SurfaceGains, u_limit=None) -> ControlOutput:
    """Plain PID on the error, oriented by the sign of the input gain."""
    u = sign(g) * (gains.Kp * err.e + gains.Ki * err.e_int + gains.Kd * err.e_dot)
    s = gains.Kp * err.e + gains.Kd * err.e_dot + gains.Ki * err.e_int
    return _finish(0.0, u, s, 0.0, 0.5 * s * s, u_limit)


def control(spec: ControllerSpec, err: ErrorState, ref_deriv: float, f: float, g: float,
            plant_order: int = 2) -> ControlOutput:
    """Dispatch on ``spec.kind``."""
    k, gf, lim = spec.kind, spec.g_floor, spec.u_limit
    if plant_order == 1:
        if k in ("pid_smc", "equivalent"):
            return pi_smc_first_order(err, ref_deriv, f, g, spec.surface, spec.law, lim, gf)
        raise ValueError(f"{k} is not defined for a first-order plant")
    if k == "pid_smc":
        return pid_smc_control(err, ref_deriv, f, g, spec.surface, spec.law, lim, gf)
    if k == "equivalent":
        if spec.law is None:
            u_eq = equivalent_control(err, ref_deriv, f, g, spec.surface, gf)
            s = pid_surface(spec.surface, err)[0]
            return _finish(u_eq, 0.0, s, 0.0, 0.5 * s * s, lim)
        return pid_smc_control(err, ref_deriv, f, g, spec.surface, spec.law, lim, gf)
    if k == "classical_smc":
        return classical_smc_control(err, ref_deriv, f, g, spec.surface.lam, spec.law, lim, gf)
    if k == "pi_2smc":
        return pi_2smc_control(err, ref_deriv, f, g, spec.surface, spec.law, lim, gf)
    if k == "pd_smc":
        return pd_smc_control(err, ref_deriv, f, g, spec.surface.Kp, spec.law, lim, gf)
    if k == "pi_pd_composite":
        return pi_pd_composite(err, ref_deriv, f, g, spec.surface, spec.law,
                               spec.pd_surface.Kp, spec.pd_law, spec.gamma, lim, gf)
    return pid_control(err, g, spec.surface, lim)


def realized_surface(spec: ControllerSpec, err: ErrorState, plant_order: int = 2):
    """``(s, s_dot, s_ddot)`` of the monitored surface given the measured error derivatives.

    ``err.e_ddot`` (second-order plants) or ``err.e_dot`` (tank) must already
    reflect the applied input.  ``s_ddot`` is ``nan`` for first-order monitors.
    """
    g = spec.surface
    if plant_order == 1:
        return g.Kp * err.e + g.Ki * err.e_int, g.Kp * err.e_dot + g.Ki * err.e, math.nan
    k = spec.kind
    if k in ("pid_smc", "equivalent", "pid"):
        s, s_dot = pid_surface(g, err)
        return s, s_dot, math.nan
    if k == "classical_smc":
        return err.e_dot + g.lam * err.e, err.e_ddot + g.lam * err.e_dot, math.nan
    if k == "pd_smc":
        s, s_dot = pd_surface(g, err)
        return s, s_dot, math.nan
    return pi_surface(g, err)


def lyapunov_diagnostics(s: float, s_dot: float, order: int = 1,
                         s_ddot: float | None = None) -> tuple[float, float]:
    """``(V, V_dot)`` for ``V = s^2/2`` or ``V = (s^2 + s'^2)/2``."""
    if order == 1:
        return 0.5 * s * s, s * s_dot
    if order == 2:
        if s_ddot is None:
            raise ValueError("order-2 diagnostics need s_ddot")
        return 0.5 * (s * s + s_dot * s_dot), s * s_dot + s_dot * s_ddot
    raise ValueError(f"unsupported Lyapunov order {order}")

"""Flat float64 encoding of scenario pieces shared by both kernel backends."""
from __future__ import annotations

import math
from dataclasses import fields

import numpy as np

from .controllers import CONTROLLER_KINDS, ControllerSpec
from .plants import DisturbanceSpec, PendulumParams, Plant, TankParams, VanDerPolParams
from .reaching import VARIANTS, ReachingLawSpec
from .surfaces import ReferenceSignal, SurfaceGains

PLANT_KINDS = ("pendulum", "vdp", "tank")
_PARAMS = (PendulumParams, VanDerPolParams, TankParams)
PLANT_WIDTH = 6
LAW_WIDTH = 11
CTRL_HEAD = 9
CTRL_WIDTH = CTRL_HEAD + 2 * LAW_WIDTH
_LAW_FIELDS = ("eps", "k", "k_sc", "alpha", "k1", "k2", "eps1", "eps2", "boundary_width")
_DIST = ("none", "sinusoid", "impulse")


def encode_plant(plant: Plant) -> tuple[int, np.ndarray]:
    arr = np.zeros(PLANT_WIDTH)
    vals = plant.as_array()
    arr[: len(vals)] = vals
    return PLANT_KINDS.index(plant.kind), arr


def decode_plant(code: int, arr) -> Plant:
    cls = _PARAMS[code]
    n = len(fields(cls))
    return Plant(PLANT_KINDS[code], cls(*[float(v) for v in arr[:n]]))


def _encode_law(law: ReachingLawSpec | None) -> list[float]:
    if law is None:
        return [-1.0] + [0.0] * (LAW_WIDTH - 1)
    return ([float(VARIANTS.index(law.variant))]
            + [float(getattr(law, f)) for f in _LAW_FIELDS]
            + [1.0 if law.switch_fn == "sat" else 0.0])


def _decode_law(arr) -> ReachingLawSpec | None:
    code = int(arr[0])
    if code < 0:
        return None
    kw = {f: float(v) for f, v in zip(_LAW_FIELDS, arr[1:10])}
    return ReachingLawSpec(VARIANTS[code], switch_fn="sat" if arr[10] else "sign", **kw)


def encode_controller(spec: ControllerSpec) -> np.ndarray:
    s = spec.surface
    pd_kp = spec.pd_surface.Kp if spec.pd_surface is not None else 0.0
    head = [
        float(CONTROLLER_KINDS.index(spec.kind)), s.Kp, s.Ki, s.Kd, s.lam,
        math.nan if spec.u_limit is None else spec.u_limit,
        spec.g_floor, spec.gamma, pd_kp,
    ]
    return np.array(head + _encode_law(spec.law) + _encode_law(spec.pd_law), dtype=float)


def decode_controller(arr) -> ControllerSpec:
    arr = [float(v) for v in arr]
    kind = CONTROLLER_KINDS[int(arr[0])]
    pd_law = _decode_law(arr[CTRL_HEAD + LAW_WIDTH:])
    return ControllerSpec(
        kind,
        SurfaceGains(*arr[1:5]),
        _decode_law(arr[CTRL_HEAD:CTRL_HEAD + LAW_WIDTH]),
        u_limit=None if math.isnan(arr[5]) else arr[5],
        g_floor=arr[6],
        pd_surface=SurfaceGains(Kp=arr[8]) if pd_law is not None else None,
        pd_law=pd_law,
        gamma=arr[7],
    )


def encode_reference(ref: ReferenceSignal) -> np.ndarray:
    return np.array([0.0 if ref.variant == "constant" else 1.0,
                     ref.value, ref.amplitude, ref.angular_freq])


def decode_reference(arr) -> ReferenceSignal:
    return ReferenceSignal("constant" if arr[0] == 0 else "sinusoid",
                           float(arr[1]), float(arr[2]), float(arr[3]))


def encode_disturbance(d: DisturbanceSpec) -> np.ndarray:
    return np.array([float(_DIST.index(d.variant)), d.amplitude, d.angular_freq,
                     d.area, d.fire_time])


def decode_disturbance(arr) -> DisturbanceSpec:
    return DisturbanceSpec(_DIST[int(arr[0])], *[float(v) for v in arr[1:5]])

"""Reference closed-loop loop in pure Python.

Takes the flat-array encoding shared with the compiled kernel, rebuilds the
model objects and steps them with the public plant/controller functions.
"""
from __future__ import annotations

import math

import numpy as np

from . import codec
from .controllers import ControllerSingularityError, control, lyapunov_diagnostics, realized_surface
from .plants import DegenerateLevelError, SingularDynamicsError, disturbance_eval
from .surfaces import ErrorState, trapezoid_update

STATUS_OK, STATUS_SINGULAR, STATUS_NONFINITE = 0, 1, 2
NCOL = 12


def rk4_step(deriv, x, t: float, dt: float) -> list[float]:
    """One classical Runge-Kutta step of ``x' = deriv(t, x)``."""
    k1 = deriv(t, x)
    h = 0.5 * dt
    k2 = deriv(t + h, [xi + h * ki for xi, ki in zip(x, k1)])
    k3 = deriv(t + h, [xi + h * ki for xi, ki in zip(x, k2)])
    k4 = deriv(t + dt, [xi + dt * ki for xi, ki in zip(x, k3)])
    w = dt / 6.0
    return [xi + w * (a + 2.0 * b + 2.0 * c + d)
            for xi, a, b, c, d in zip(x, k1, k2, k3, k4)]


def run(plant_code, nominal, true, ctrl, ref, dist, unc, x0, dt, n_steps, hold=1):
    """Simulate ``n_steps`` steps; returns ``(rows, status, fail_step)``.

    The controller runs every ``hold`` integration steps and its output is held
    in between.  ``rows`` has one line per integration step (``n_steps + 1`` on
    success).
    """
    nom_plant = codec.decode_plant(int(plant_code), nominal)
    true_plant = codec.decode_plant(int(plant_code), true)
    spec = codec.decode_controller(ctrl)
    reference = codec.decode_reference(ref)
    disturbance = codec.decode_disturbance(dist)
    unc_amp, unc_w = float(unc[0]), float(unc[1])
    order = nom_plant.order
    n_steps, hold = int(n_steps), int(hold)
    period = hold * dt

    out = np.empty((n_steps + 1, NCOL))
    x = [float(v) for v in x0]
    e_int = 0.0
    e_prev = 0.0
    status, fail = STATUS_OK, -1
    rows = 0

    for i in range(n_steps + 1):
        t = i * dt
        r, r_dot, r_ddot = reference(t)
        e = r - x[0]
        if i > 0:
            e_int = trapezoid_update(e_int, e_prev, e, dt)
        err = ErrorState(e, r_dot - x[1] if order == 2 else 0.0, e_int)
        try:
            if i % hold == 0:
                f, g = nom_plant.decompose(x)
                ctl = control(spec, err, r_ddot if order == 2 else r_dot, f, g, order)
                u = ctl.u
                # an impulse spreads over the whole sampling period
                d_imp = 0.0 if disturbance.variant != "impulse" else \
                    disturbance_eval(disturbance, t, period)
            d = d_imp if disturbance.variant == "impulse" else disturbance_eval(disturbance, t, dt)
            ft, gt = true_plant.decompose(x)
        except ControllerSingularityError:
            status, fail = STATUS_SINGULAR, i
            break
        except (SingularDynamicsError, DegenerateLevelError):
            status, fail = STATUS_NONFINITE, i
            break
        acc = ft + unc_amp * math.sin(unc_w * t) + gt * u + d
        if order == 2:
            err.e_ddot = r_ddot - acc
            mon = spec.order
        else:
            err.e_dot = r_dot - acc
            mon = 1
        s, s_dot, s_ddot = realized_surface(spec, err, order)
        V, V_dot = lyapunov_diagnostics(s, s_dot, mon, s_ddot)
        row = (t, x[0], x[1] if order == 2 else acc, e, u, ctl.u_eq, ctl.u_sw,
               s, s_dot, V, V_dot, d)
        if not all(math.isfinite(v) for v in row):
            status, fail = STATUS_NONFINITE, i
            break
        out[i] = row
        rows = i + 1
        if i == n_steps:
            break

        def deriv(tau, y, u=u, d=d):
            dy = true_plant.dynamics(y, u, d)
            dy[-1] += unc_amp * math.sin(unc_w * tau)
            return dy

        try:
            x = rk4_step(deriv, x, t, dt)
        except (SingularDynamicsError, DegenerateLevelError, OverflowError, ValueError):
            status, fail = STATUS_NONFINITE, i + 1
            break
        if order == 1:
            p = true_plant.params
            x[0] = min(max(x[0], p.min_level), p.max_height)
        if not all(math.isfinite(v) for v in x):
            status, fail = STATUS_NONFINITE, i + 1
            break
        e_prev = e

    return out[:rows], status, fail

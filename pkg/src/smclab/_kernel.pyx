# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled closed-loop kernel.

Same flat-array contract and the same arithmetic order as ``_pykernel.run``
so both backends agree to rounding.
"""
import numpy as np

from libc.math cimport sin, cos, sqrt, exp, log, fabs, copysign, isfinite, isnan, M_PI

cdef enum:
    NCOL = 12
    LAW_WIDTH = 11
    CTRL_HEAD = 9

cdef enum:
    OK = 0
    SINGULAR = 1
    NONFINITE = 2

# controller kinds, in CONTROLLER_KINDS order
cdef enum:
    K_EQUIVALENT = 0
    K_PID_SMC = 1
    K_CLASSICAL = 2
    K_PI_2SMC = 3
    K_PD_SMC = 4
    K_COMPOSITE = 5
    K_PID = 6

# reaching-law variants, in VARIANTS order
cdef enum:
    L_CONSTANT = 0
    L_EXPONENTIAL = 1
    L_POWER = 2
    L_POWER_EXP = 3
    L_PD_MOD = 4
    L_SECOND = 5

cdef double LPH_TO_CM3_PER_S = 1000.0 / 3600.0
cdef double NAN_ = float("nan")


cdef struct Out:
    double u
    double u_eq
    double u_sw


cdef inline double sgn(double s) nogil:
    if s > 0:
        return 1.0
    if s < 0:
        return -1.0
    return 0.0


cdef inline double abs_pow(double s, double alpha) nogil:
    if s == 0:
        return 0.0
    return exp(alpha * log(fabs(s)))


cdef inline double switch(const double* L, double s) nogil:
    cdef double delta = L[9]
    if L[10] != 0:
        if s > delta:
            return 1.0
        if s < -delta:
            return -1.0
        return s / delta
    return sgn(s)


cdef double law(const double* L, double s, double s_dot) nogil:
    cdef int v = <int>L[0]
    cdef double k, eps, alpha, p
    if v == L_SECOND:
        p = abs_pow(s, L[4])
        return (-L[5] * s_dot - L[6] * s
                - L[7] * p * switch(L, s) - L[8] * p * switch(L, s_dot))
    if v == L_CONSTANT:
        k, eps, alpha = 0.0, L[1], 0.0
    elif v == L_EXPONENTIAL:
        k, eps, alpha = L[2], L[1], 0.0
    elif v == L_POWER:
        k, eps, alpha = 0.0, L[2], L[4]
    elif v == L_POWER_EXP:
        k, eps, alpha = L[2], L[3], L[4]
    else:
        k, eps, alpha = L[5], L[7], L[4]
    return -k * s - eps * abs_pow(s, alpha) * switch(L, s)


cdef int decompose(int code, const double* p, double x0, double x1,
                   double* f, double* g) nogil:
    cdef double m, l, s, c, ml, den, area
    if code == 0:
        m = p[1]
        l = p[3]
        ml = m * l
        c = cos(x0)
        s = sin(x0)
        den = ml * ml * (c * c) - (p[2] + m * (l * l))
        if fabs(den) < 1e-12:
            return -1
        f[0] = (m * p[4] * l * s - m * m * l * l * c * s * x1 * x1) / den
        g[0] = m * l * c / den
        return 0
    if code == 1:
        f[0] = -p[0] * x0 + p[1] * (1.0 - x0 * x0) * x1
        g[0] = 1.0
        return 0
    if x0 < p[4]:
        return -1
    area = M_PI * (p[0] * p[0]) * x0 * x0 / (p[1] * p[1])
    f[0] = -p[2] * sqrt(x0) / area
    g[0] = LPH_TO_CM3_PER_S / area
    return 0


cdef inline int invert(double num, double gain, double g_floor, double* out) nogil:
    if not fabs(gain) > g_floor:
        return -1
    out[0] = num / gain
    return 0


cdef inline int finish(double u_eq, double u_sw, double u_limit, Out* o) nogil:
    cdef double u = u_eq + u_sw
    if not isfinite(u):
        return -1
    if not isnan(u_limit) and fabs(u) > u_limit:
        u = copysign(u_limit, u)
        u_sw = u - u_eq
    o.u = u
    o.u_eq = u_eq
    o.u_sw = u_sw
    return 0


cdef int control(const double* C, int order, double e, double e_dot, double e_int,
                 double rd, double f, double g, Out* o) nogil:
    cdef int kind = <int>C[0]
    cdef double Kp = C[1], Ki = C[2], Kd = C[3], lam = C[4]
    cdef double ulim = C[5], gf = C[6], gamma = C[7], pKp = C[8]
    cdef const double* L1 = C + CTRL_HEAD
    cdef const double* L2 = C + CTRL_HEAD + LAW_WIDTH
    cdef double u_eq, s, s_dot, demand, kg, u_eq2, s2
    cdef Out a, b

    if order == 1:
        s = Kp * e + Ki * e_int
        kg = Kp * g
        if invert(Kp * (rd - f) + Ki * e, kg, gf, &u_eq) < 0:
            return -1
        demand = 0.0 if L1[0] < 0 else law(L1, s, 0.0)
        return finish(u_eq, -demand / kg, ulim, o)

    if kind == K_PID_SMC or kind == K_EQUIVALENT:
        if invert(Ki * e + Kp * e_dot + Kd * (rd - f), Kd * g, gf, &u_eq) < 0:
            return -1
        if kind == K_EQUIVALENT and L1[0] < 0:
            return finish(u_eq, 0.0, ulim, o)
        s = Kp * e + Kd * e_dot + Ki * e_int
        demand = law(L1, s, 0.0)
        return finish(u_eq, -demand / (Kd * g), ulim, o)
    if kind == K_CLASSICAL:
        s = e_dot + lam * e
        if invert(lam * e_dot + rd - f, g, gf, &u_eq) < 0:
            return -1
        demand = law(L1, s, 0.0)
        return finish(u_eq, -demand / g, ulim, o)
    if kind == K_PI_2SMC or kind == K_COMPOSITE:
        s = Kp * e + Ki * e_int
        s_dot = Kp * e_dot + Ki * e
        kg = Kp * g
        if invert(Kp * (rd - f) + Ki * e_dot, kg, gf, &u_eq) < 0:
            return -1
        demand = law(L1, s, s_dot)
        if kind == K_PI_2SMC:
            return finish(u_eq, -demand / kg, ulim, o)
        if finish(u_eq, -demand / kg, NAN_, &a) < 0:
            return -1
        s2 = pKp * e + e_dot
        if invert(pKp * e_dot + rd - f, g, gf, &u_eq2) < 0:
            return -1
        demand = law(L2, s2, 0.0)
        if finish(u_eq2, -demand / g, NAN_, &b) < 0:
            return -1
        return finish(a.u_eq - gamma * (a.u_eq - b.u_eq),
                      a.u_sw - gamma * (a.u_sw - b.u_sw), ulim, o)
    if kind == K_PD_SMC:
        s = Kp * e + e_dot
        if invert(Kp * e_dot + rd - f, g, gf, &u_eq) < 0:
            return -1
        demand = law(L1, s, 0.0)
        return finish(u_eq, -demand / g, ulim, o)
    # plain PID
    return finish(0.0, sgn(g) * (Kp * e + Ki * e_int + Kd * e_dot), ulim, o)


cdef int dynamics(int code, const double* p, double y0, double y1, double u, double d,
                  double unc, double* dy0, double* dy1) nogil:
    cdef double f, g, h
    if code == 2:
        h = y0 if y0 > p[4] else p[4]
        if decompose(code, p, h, 0.0, &f, &g) < 0:
            return -1
        dy0[0] = f + g * u + d + unc
        return 0
    if decompose(code, p, y0, y1, &f, &g) < 0:
        return -1
    dy0[0] = y1
    dy1[0] = f + g * u + d + unc
    return 0


def run(plant_code, nominal, true, ctrl, ref, dist, unc, x0, double dt, n_steps, hold=1):
    """Simulate ``n_steps`` steps; returns ``(rows, status, fail_step)``."""
    cdef int code = int(plant_code)
    cdef Py_ssize_t n = int(n_steps)
    cdef Py_ssize_t H = int(hold)
    cdef double period = H * dt
    cdef double[::1] nom = np.ascontiguousarray(nominal, dtype=np.float64)
    cdef double[::1] tru = np.ascontiguousarray(true, dtype=np.float64)
    cdef double[::1] C = np.ascontiguousarray(ctrl, dtype=np.float64)
    cdef double[::1] R = np.ascontiguousarray(ref, dtype=np.float64)
    cdef double[::1] D = np.ascontiguousarray(dist, dtype=np.float64)
    cdef double[::1] U = np.ascontiguousarray(unc, dtype=np.float64)
    cdef double[::1] X = np.ascontiguousarray(x0, dtype=np.float64)
    out_arr = np.empty((n + 1, NCOL))
    cdef double[:, ::1] out = out_arr

    cdef int order = 1 if code == 2 else 2
    cdef int kind = <int>C[0]
    cdef int mon = 2 if (order == 2 and (kind == K_PI_2SMC or kind == K_COMPOSITE)) else 1
    cdef double Kp = C[1], Ki = C[2], Kd = C[3], lam = C[4]
    cdef double ua = U[0], uw = U[1]
    cdef double x_0 = X[0], x_1 = X[1] if order == 2 else 0.0
    cdef double e_int = 0.0, e_prev = 0.0
    cdef double t, r, r_dot, r_ddot, a, w, sw, cw, e, e_dot, e_ddot, f, g, ft, gt, d, acc
    cdef double s, s_dot, s_ddot, V, V_dot, hh, wt, unc_t, d_imp = 0.0
    cdef double k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b
    cdef Out o
    cdef int status = OK
    cdef Py_ssize_t fail = -1, rows = 0, i, j
    cdef int dvar = <int>D[0]

    with nogil:
        for i in range(n + 1):
            t = i * dt
            if R[0] == 0:
                r, r_dot, r_ddot = R[1], 0.0, 0.0
            else:
                a = R[2]
                w = R[3]
                sw = sin(w * t)
                cw = cos(w * t)
                r, r_dot, r_ddot = R[1] + a * sw, a * w * cw, -a * w * w * sw
            e = r - x_0
            if i > 0:
                e_int = e_int + 0.5 * (e_prev + e) * dt
            e_dot = r_dot - x_1 if order == 2 else 0.0
            if i % H == 0:
                if decompose(code, &nom[0], x_0, x_1, &f, &g) < 0:
                    status, fail = NONFINITE, i
                    break
                if control(&C[0], order, e, e_dot, e_int, r_ddot if order == 2 else r_dot,
                           f, g, &o) < 0:
                    status, fail = SINGULAR, i
                    break
                d_imp = D[3] / period if (dvar == 2 and t - 1e-9 * period <= D[4]
                                          and D[4] < t + period - 1e-9 * period) else 0.0
            if dvar == 1:
                d = D[1] * sin(D[2] * t)
            elif dvar == 2:
                d = d_imp
            else:
                d = 0.0
            if decompose(code, &tru[0], x_0, x_1, &ft, &gt) < 0:
                status, fail = NONFINITE, i
                break
            acc = ft + ua * sin(uw * t) + gt * o.u + d

            s_ddot = 0.0
            if order == 1:
                e_dot = r_dot - acc
                s = Kp * e + Ki * e_int
                s_dot = Kp * e_dot + Ki * e
            else:
                e_ddot = r_ddot - acc
                if kind == K_CLASSICAL:
                    s = e_dot + lam * e
                    s_dot = e_ddot + lam * e_dot
                elif kind == K_PD_SMC:
                    s = Kp * e + e_dot
                    s_dot = Kp * e_dot + e_ddot
                elif kind == K_PI_2SMC or kind == K_COMPOSITE:
                    s = Kp * e + Ki * e_int
                    s_dot = Kp * e_dot + Ki * e
                    s_ddot = Kp * e_ddot + Ki * e_dot
                else:
                    s = Kp * e + Kd * e_dot + Ki * e_int
                    s_dot = Ki * e + Kp * e_dot + Kd * e_ddot
            if mon == 2:
                V = 0.5 * (s * s + s_dot * s_dot)
                V_dot = s * s_dot + s_dot * s_ddot
            else:
                V = 0.5 * s * s
                V_dot = s * s_dot

            out[i, 0] = t
            out[i, 1] = x_0
            out[i, 2] = x_1 if order == 2 else acc
            out[i, 3] = e
            out[i, 4] = o.u
            out[i, 5] = o.u_eq
            out[i, 6] = o.u_sw
            out[i, 7] = s
            out[i, 8] = s_dot
            out[i, 9] = V
            out[i, 10] = V_dot
            out[i, 11] = d
            for j in range(NCOL):
                if not isfinite(out[i, j]):
                    status = NONFINITE
                    break
            if status != OK:
                fail = i
                break
            rows = i + 1
            if i == n:
                break

            # RK4 with u and d held over the step
            hh = 0.5 * dt
            k1b = k2b = k3b = k4b = 0.0
            if dynamics(code, &tru[0], x_0, x_1, o.u, d, ua * sin(uw * t), &k1a, &k1b) < 0 \
                    or dynamics(code, &tru[0], x_0 + hh * k1a, x_1 + hh * k1b, o.u, d,
                                ua * sin(uw * (t + hh)), &k2a, &k2b) < 0 \
                    or dynamics(code, &tru[0], x_0 + hh * k2a, x_1 + hh * k2b, o.u, d,
                                ua * sin(uw * (t + hh)), &k3a, &k3b) < 0 \
                    or dynamics(code, &tru[0], x_0 + dt * k3a, x_1 + dt * k3b, o.u, d,
                                ua * sin(uw * (t + dt)), &k4a, &k4b) < 0:
                status, fail = NONFINITE, i + 1
                break
            wt = dt / 6.0
            x_0 = x_0 + wt * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
            if order == 2:
                x_1 = x_1 + wt * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
            else:
                x_0 = x_0 if x_0 > tru[4] else tru[4]
                x_0 = x_0 if x_0 < tru[1] else tru[1]
            if not (isfinite(x_0) and isfinite(x_1)):
                status, fail = NONFINITE, i + 1
                break
            e_prev = e

    return out_arr[:rows], status, fail

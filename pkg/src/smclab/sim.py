"""Fixed-step closed-loop simulation, metrics and comparison tables."""
from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import _pykernel, codec
from ._pykernel import STATUS_NONFINITE, STATUS_OK, STATUS_SINGULAR, rk4_step
from .controllers import ControllerSpec
from .plants import DisturbanceSpec, Plant
from .surfaces import ReferenceSignal

if os.environ.get("SMCLAB_PURE_PYTHON"):
    _kernel = None
else:
    try:
        from . import _kernel
    except ImportError:
        _kernel = None

BACKEND = "cython" if _kernel is not None else "python"
COLUMNS = ("t", "x0", "x1", "e", "u", "u_eq", "u_sw", "s", "sdot", "V", "Vdot", "d")
STATUS_NAMES = {STATUS_OK: "ok", STATUS_SINGULAR: "singular", STATUS_NONFINITE: "nonfinite"}

__all__ = [
    "BACKEND", "Scenario", "Trajectory", "Metrics", "MismatchError", "rk4_step",
    "simulate", "compute_metrics", "compare", "write_trajectory_csv",
]


class MismatchError(ValueError):
    """Scenarios handed to :func:`compare` disagree on a shared field."""


@dataclass(frozen=True)
class Scenario:
    plant: Plant
    controller: ControllerSpec
    x0: tuple
    duration: float
    dt: float = 0.01
    reference: ReferenceSignal = field(default_factory=ReferenceSignal)
    disturbance: DisturbanceSpec = field(default_factory=DisturbanceSpec)
    # additive term on the drift: amplitude * sin(angular_freq * t)
    uncertainty: tuple[float, float] = (0.0, 1.0)
    perturbation: tuple[tuple[str, float], ...] = ()
    name: str = ""
    # controller sampling period; defaults to dt, otherwise a whole multiple of it
    control_period: float | None = None

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError("dt must be positive")
        if not self.duration >= self.dt:
            raise ValueError("duration must be at least one step")
        n = round(self.duration / self.dt)
        if abs(n * self.dt - self.duration) > 1e-9 * max(1.0, self.duration):
            raise ValueError(f"duration {self.duration} is not a whole number of {self.dt} steps")
        if len(self.x0) != self.plant.order:
            raise ValueError(f"{self.plant.kind} needs a {self.plant.order}-component initial state")
        if self.control_period is not None:
            h = round(self.control_period / self.dt)
            if h < 1 or abs(h * self.dt - self.control_period) > 1e-9 * self.control_period:
                raise ValueError("control_period must be a whole multiple of dt")
        if isinstance(self.perturbation, dict):
            object.__setattr__(self, "perturbation", tuple(sorted(self.perturbation.items())))

    @property
    def n_steps(self) -> int:
        return round(self.duration / self.dt)

    @property
    def hold(self) -> int:
        """Integration steps per controller update."""
        return 1 if self.control_period is None else round(self.control_period / self.dt)

    @property
    def true_plant(self) -> Plant:
        return self.plant.perturbed(dict(self.perturbation)) if self.perturbation else self.plant

    def with_controller(self, controller: ControllerSpec, name: str | None = None) -> "Scenario":
        return replace(self, controller=controller, name=self.name if name is None else name)

    def encode(self) -> tuple:
        code, nominal = codec.encode_plant(self.plant)
        _, true = codec.encode_plant(self.true_plant)
        return (
            code, nominal, true,
            codec.encode_controller(self.controller),
            codec.encode_reference(self.reference),
            codec.encode_disturbance(self.disturbance),
            np.array(self.uncertainty, dtype=float),
            np.array(self.x0, dtype=float),
            float(self.dt), self.n_steps, self.hold,
        )


@dataclass
class Trajectory:
    data: np.ndarray
    status: str = "ok"
    fail_step: int = -1
    message: str = ""

    @property
    def aborted(self) -> bool:
        return self.status != "ok"

    def __len__(self) -> int:
        return self.data.shape[0]

    def __getattr__(self, name):
        if name in COLUMNS:
            return self.data[:, COLUMNS.index(name)]
        raise AttributeError(name)


def simulate(scenario: Scenario, backend: str | None = None) -> Trajectory:
    """Run the closed loop; aborts keep the partial record and a reason."""
    impl = {"python": _pykernel, "cython": _kernel}.get(backend or BACKEND)
    if impl is None:
        raise RuntimeError(f"backend {backend!r} is not available")
    rows, status, fail = impl.run(*scenario.encode())
    traj = Trajectory(np.asarray(rows), STATUS_NAMES[status], fail)
    if status == STATUS_SINGULAR:
        traj.message = f"controller singularity at step {fail} (t={fail * scenario.dt:.6g} s)"
    elif status == STATUS_NONFINITE:
        traj.message = f"non-finite state at step {fail} (t={fail * scenario.dt:.6g} s)"
    return traj


@dataclass
class Metrics:
    """Step-response figures; ``None`` marks a metric that is undefined for the run."""

    rise_time: float | None
    settling_time: float | None
    peak_overshoot: float | None
    ise: float
    chattering_index: float
    steady_state_error: float

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def as_text(self) -> str:
        return "".join(f"{k}={_fmt(v)}\n" for k, v in self.as_dict().items())


def _fmt(v) -> str:
    if v is None:
        return "undefined"
    if isinstance(v, str):
        return v
    return f"{v:.9g}"


def _crossing(t, y, level, rising):
    """First time ``y`` reaches ``level`` with linear interpolation."""
    hit = np.nonzero(y >= level if rising else y <= level)[0]
    if hit.size == 0:
        return None
    i = hit[0]
    if i == 0:
        return float(t[0])
    y0, y1 = y[i - 1], y[i]
    return float(t[i - 1] + (level - y0) / (y1 - y0) * (t[i] - t[i - 1]))


def compute_metrics(traj: Trajectory, reference: ReferenceSignal | None = None,
                    settle_band: float | None = None) -> Metrics:
    """Metrics of the output against a constant (or tracked) reference.

    The settle band defaults to 2% of the commanded step, or 0.02 absolute when
    the target is zero or the reference is not constant.
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    t, y, e, u = traj.t, traj.x0, traj.e, traj.u
    reference = reference or ReferenceSignal()
    const = reference.variant == "constant"
    step = (reference.value - y[0]) if const else 0.0
    if settle_band is None:
        settle_band = 0.02 * abs(step) if const and reference.value != 0 else 0.02

    if t.size > 1:
        ise = float(np.trapezoid(e * e, t))
        chatter = float(np.sum(np.abs(np.diff(u))))
    else:
        ise = chatter = 0.0

    outside = np.nonzero(np.abs(e) > settle_band)[0]
    if outside.size == 0:
        settling = float(t[0])
    elif outside[-1] + 1 < t.size:
        settling = float(t[outside[-1] + 1])
    else:
        settling = None

    rise = overshoot = None
    if const and step != 0:
        rising = step > 0
        t10 = _crossing(t, y, y[0] + 0.1 * step, rising)
        t90 = _crossing(t, y, y[0] + 0.9 * step, rising)
        if t10 is not None and t90 is not None:
            rise = t90 - t10
        crossed = np.nonzero((y - reference.value) * np.sign(step) >= 0)[0]
        if crossed.size:
            beyond = (y[crossed[0]:] - reference.value) * np.sign(step)
            overshoot = float(max(beyond.max(), 0.0))
        else:
            overshoot = 0.0
    elif const:
        overshoot = float(np.abs(e).max())

    return Metrics(rise, settling, overshoot, ise, chatter, float(abs(e[-1])))


def disturbance_bound(scenario: Scenario) -> float:
    """Bound on the persistent matched disturbance (impulses are transient)."""
    d = scenario.disturbance
    persistent = abs(d.amplitude) if d.variant == "sinusoid" else 0.0
    return persistent + abs(scenario.uncertainty[0])


def ultimate_band(scenario: Scenario) -> float:
    """Width of ``|s|`` below which a bounded disturbance can beat the reaching law.

    Outside this band the reaching condition is guaranteed for the nominal
    model; the monitor uses ``max(boundary_width, band)``.
    """
    spec = scenario.controller
    width = spec.law.boundary_width if spec.law is not None else 0.05
    d = disturbance_bound(scenario)
    if d == 0 or spec.law is None:
        return width
    if scenario.plant.order == 1:
        gain = spec.surface.Kp
    elif spec.kind in ("pid_smc", "equivalent"):
        gain = spec.surface.Kd
    elif spec.kind in ("pi_2smc", "pi_pd_composite"):
        return max(width, spec.surface.Kp * d / spec.law.k2)
    else:
        gain = 1.0
    k, eps, alpha = spec.law.terms()
    if k > 0:
        band = gain * d / k
    elif alpha > 0:
        band = (gain * d / eps) ** (1.0 / alpha)
    else:
        band = 0.0 if eps > gain * d else math.inf
    return max(width, band)


def reaching_fractions(traj: Trajectory, delta: float) -> tuple[int, float, float]:
    """``(n, frac_reaching, frac_lyapunov)`` over samples with ``|s| > delta``.

    Fractions are of samples with ``s * s_dot < 0`` and ``V_dot <= 0``; both
    are 1.0 when no sample lies outside the band.
    """
    mask = np.abs(traj.s) > delta
    n = int(mask.sum())
    if n == 0:
        return 0, 1.0, 1.0
    reach = float(np.mean((traj.s * traj.sdot)[mask] < 0))
    lyap = float(np.mean(traj.Vdot[mask] <= 0))
    return n, reach, lyap


def _shared_key(sc: Scenario):
    return (sc.plant, sc.reference, sc.disturbance, sc.uncertainty, sc.perturbation,
            tuple(sc.x0), sc.duration, sc.dt, sc.control_period)


@dataclass
class ComparisonRow:
    name: str
    metrics: Metrics | None
    status: str
    message: str = ""


def compare(scenarios: list[Scenario], orderings=(), settle_band=None):
    """Simulate every scenario and check requested metric orderings.

    ``orderings`` holds ``(metric, [name, name, ...])`` meaning the metric is
    strictly increasing along the listed names.  Returns ``(rows, checks)`` with
    ``checks`` a list of ``(description, passed)``.
    """
    if not scenarios:
        raise ValueError("nothing to compare")
    key = _shared_key(scenarios[0])
    for sc in scenarios[1:]:
        if _shared_key(sc) != key:
            raise MismatchError(f"scenario {sc.name!r} differs from {scenarios[0].name!r} "
                                "in plant, reference, disturbance, initial state or timing")
    rows = []
    for sc in scenarios:
        traj = simulate(sc)
        m = None if traj.aborted else compute_metrics(traj, sc.reference, settle_band)
        rows.append(ComparisonRow(sc.name, m, traj.status, traj.message))
    by_name = {r.name: r for r in rows}
    checks = []
    for metric, names in orderings:
        values = []
        for nm in names:
            if nm not in by_name:
                raise KeyError(f"ordering names unknown case {nm!r}")
            row = by_name[nm]
            values.append(None if row.metrics is None else getattr(row.metrics, metric))
        ok = all(v is not None for v in values) and all(a < b for a, b in zip(values, values[1:]))
        desc = f"{metric}: " + " < ".join(f"{n}({_fmt(v)})" for n, v in zip(names, values))
        checks.append((desc, ok))
    return rows, checks


def comparison_csv(rows) -> str:
    buf = io.StringIO()
    names = [f.name for f in fields(Metrics)]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["case", "status", *names])
    for r in rows:
        vals = [_fmt(None if r.metrics is None else getattr(r.metrics, n)) for n in names]
        w.writerow([r.name, r.status, *vals])
    return buf.getvalue()


def metrics_csv(m: Metrics) -> str:
    d = m.as_dict()
    return ",".join(d) + "\n" + ",".join(_fmt(v) for v in d.values()) + "\n"


def write_trajectory_csv(traj: Trajectory, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        fh.write(",".join(COLUMNS) + "\n")
        for row in traj.data:
            fh.write(",".join(f"{v:.9g}" for v in row) + "\n")

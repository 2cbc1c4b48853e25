"""TOML scenario files: strict key checking and construction of model objects."""
from __future__ import annotations

import math
import sys
from dataclasses import fields
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .controllers import ControllerSpec
from .mpso import DEFAULT_BOUNDS, FitnessSpec, SwarmConfig, TuningConfigError, sphere
from .plants import DisturbanceSpec, PendulumParams, Plant, TankParams, VanDerPolParams
from .reaching import ReachingLawSpec
from .sim import Scenario
from .surfaces import GainError, ReferenceSignal, SurfaceGains


class ConfigError(ValueError):
    pass


_PARAMS = {"pendulum": PendulumParams, "vdp": VanDerPolParams, "tank": TankParams}
_LAW_KEYS = {f.name for f in fields(ReachingLawSpec)}
_SECTIONS = {
    "name", "description", "plant", "controller", "surface", "reaching_law", "reference",
    "disturbance", "uncertainty", "perturbation", "sim", "metrics", "tuning", "case", "ordering",
}
_CASE_KEYS = {"name", "controller", "surface", "reaching_law"}


def bundled_names() -> list[str]:
    root = resources.files("smclab") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def load(source) -> dict:
    """Parse a config given as a path or the name of a bundled config."""
    path = Path(source)
    if not path.exists():
        res = resources.files("smclab") / "configs" / f"{source}.toml"
        if not res.is_file():
            raise ConfigError(f"no config file or bundled config named {source!r}")
        text = res.read_text()
        stem = str(source)
    else:
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
        stem = path.stem
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    _check_keys("top level", doc, _SECTIONS)
    doc.setdefault("name", stem)
    return doc


def _check_keys(where: str, table, allowed) -> None:
    if not isinstance(table, dict):
        raise ConfigError(f"{where} must be a table")
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def _section(doc: dict, name: str, required: bool = True) -> dict:
    if name not in doc:
        if required:
            raise ConfigError(f"missing required section [{name}]")
        return {}
    if not isinstance(doc[name], dict):
        raise ConfigError(f"[{name}] must be a table")
    return doc[name]


def _float(where: str, v) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where} must be a number, got {v!r}")
    return float(v)


def _numbers(where: str, table: dict, skip=()) -> dict:
    return {k: (v if k in skip else _float(f"{where}.{k}", v)) for k, v in table.items()}


def build_plant(doc: dict) -> Plant:
    sec = dict(_section(doc, "plant"))
    kind = sec.pop("kind", None)
    if kind not in _PARAMS:
        raise ConfigError(f"[plant] kind must be one of {sorted(_PARAMS)}, got {kind!r}")
    cls = _PARAMS[kind]
    _check_keys("[plant]", sec, {f.name for f in fields(cls)})
    try:
        return Plant(kind, cls(**_numbers("plant", sec)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _law(where: str, table: dict | None) -> ReachingLawSpec | None:
    if table is None:
        return None
    _check_keys(where, table, _LAW_KEYS)
    kw = _numbers(where, table, skip=("variant", "switch_fn"))
    try:
        return ReachingLawSpec(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _surface(where: str, table: dict) -> SurfaceGains:
    _check_keys(where, table, {"Kp", "Ki", "Kd", "lam"})
    return SurfaceGains(**_numbers(where, table))


def build_controller(ctrl: dict, surface: dict, law: dict | None) -> ControllerSpec:
    ctrl = dict(ctrl)
    _check_keys("[controller]", ctrl,
                {"kind", "u_limit", "g_floor", "gamma", "pd_surface", "pd_reaching_law"})
    if "kind" not in ctrl:
        raise ConfigError("[controller] needs a kind")
    kw = {"kind": ctrl["kind"]}
    for key in ("u_limit", "g_floor", "gamma"):
        if key in ctrl:
            kw[key] = _float(f"controller.{key}", ctrl[key])
    if "pd_surface" in ctrl:
        kw["pd_surface"] = _surface("[controller.pd_surface]", ctrl["pd_surface"])
    if "pd_reaching_law" in ctrl:
        kw["pd_law"] = _law("[controller.pd_reaching_law]", ctrl["pd_reaching_law"])
    try:
        return ControllerSpec(surface=_surface("[surface]", surface),
                              law=_law("[reaching_law]", law), **kw)
    except (GainError, ValueError) as exc:
        raise ConfigError(f"controller: {exc}") from exc


def _reference(doc) -> ReferenceSignal:
    sec = _section(doc, "reference", required=False)
    _check_keys("[reference]", sec, {"variant", "value", "amplitude", "angular_freq"})
    try:
        return ReferenceSignal(**_numbers("reference", sec, skip=("variant",)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _disturbance(doc) -> DisturbanceSpec:
    sec = dict(_section(doc, "disturbance", required=False))
    _check_keys("[disturbance]", sec, {"variant", "amplitude", "angular_freq", "area",
                                       "fire_time", "weight", "time_scale"})
    kw = _numbers("disturbance", sec, skip=("variant",))
    try:
        # weight * delta(time_scale * t) form
        if "weight" in kw or "time_scale" in kw:
            if kw.get("variant", "impulse") != "impulse" or "area" in kw:
                raise ConfigError("weight/time_scale describe an impulse and replace area")
            return DisturbanceSpec.scaled_impulse(kw.get("weight", 1.0), kw.get("time_scale", 1.0),
                                                  kw.get("fire_time", 0.0))
        return DisturbanceSpec(**kw)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"disturbance: {exc}") from exc


def build_scenario(doc: dict, case: dict | None = None, dt: float | None = None) -> Scenario:
    """Scenario from the shared sections, optionally overridden by one ``[[case]]``."""
    case = case or {}
    plant = build_plant(doc)
    if "controller" in case:
        # a case naming its own controller brings its own gains
        ctrl, surface, law = case["controller"], case.get("surface", {}), case.get("reaching_law")
    else:
        ctrl = _section(doc, "controller")
        surface = case.get("surface", _section(doc, "surface", required=False))
        law = case.get("reaching_law", doc.get("reaching_law"))
    controller = build_controller(ctrl, surface, law)

    sim = _section(doc, "sim")
    _check_keys("[sim]", sim, {"dt", "duration", "x0", "control_period"})
    for key in ("duration", "x0"):
        if key not in sim:
            raise ConfigError(f"[sim] needs {key}")
    x0 = sim["x0"]
    if not isinstance(x0, list):
        raise ConfigError("sim.x0 must be a list")
    x0 = tuple(_float("sim.x0", v) for v in x0)
    step = dt if dt is not None else _float("sim.dt", sim.get("dt", 0.01))

    unc = _section(doc, "uncertainty", required=False)
    _check_keys("[uncertainty]", unc, {"amplitude", "angular_freq"})
    unc = _numbers("uncertainty", unc)
    pert = _numbers("perturbation", _section(doc, "perturbation", required=False))
    try:
        plant.perturbed(pert)
        return Scenario(
            plant, controller, x0, _float("sim.duration", sim["duration"]), step,
            reference=_reference(doc), disturbance=_disturbance(doc),
            uncertainty=(unc.get("amplitude", 0.0), unc.get("angular_freq", 1.0)),
            perturbation=pert, name=case.get("name", doc["name"]),
            control_period=(_float("sim.control_period", sim["control_period"])
                            if "control_period" in sim else None),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def settle_band(doc: dict) -> float | None:
    sec = _section(doc, "metrics", required=False)
    _check_keys("[metrics]", sec, {"settle_band"})
    return _float("metrics.settle_band", sec["settle_band"]) if "settle_band" in sec else None


def build_compare(doc: dict, dt: float | None = None):
    """``(scenarios, orderings)`` for a multi-case config."""
    cases = doc.get("case")
    if not cases or not isinstance(cases, list):
        raise ConfigError("compare needs at least one [[case]]")
    scenarios = []
    for j, case in enumerate(cases):
        _check_keys(f"[[case]] #{j + 1}", case, _CASE_KEYS)
        if "name" not in case:
            raise ConfigError(f"[[case]] #{j + 1} needs a name")
        scenarios.append(build_scenario(doc, case, dt))
    names = [s.name for s in scenarios]
    if len(set(names)) != len(names):
        raise ConfigError("case names must be unique")
    orderings = []
    for j, o in enumerate(doc.get("ordering", [])):
        _check_keys(f"[[ordering]] #{j + 1}", o, {"metric", "cases"})
        if o.get("metric") not in ("rise_time", "settling_time", "peak_overshoot", "ise",
                                   "chattering_index", "steady_state_error"):
            raise ConfigError(f"[[ordering]] #{j + 1}: unknown metric {o.get('metric')!r}")
        missing = [c for c in o.get("cases", []) if c not in names]
        if missing or len(o.get("cases", [])) < 2:
            raise ConfigError(f"[[ordering]] #{j + 1} must list at least two known cases")
        orderings.append((o["metric"], list(o["cases"])))
    return scenarios, orderings


_TUNING_KEYS = {"objective", "gains", "bounds", "particle_count", "subpopulation_count",
                "max_iterations", "schedule", "seed", "random_factors", "velocity_clamp",
                "chattering_weight"}


def build_tuning(doc: dict, seed: int | None = None, dt: float | None = None):
    """``(SwarmConfig, fitness, names)`` from the ``[tuning]`` section."""
    sec = _section(doc, "tuning")
    _check_keys("[tuning]", sec, _TUNING_KEYS)
    objective = sec.get("objective", "ise")
    try:
        if objective == "sphere":
            bounds = sec.get("bounds", [[-5.0, 5.0], [-5.0, 5.0]])
            fitness = sphere
            names = [f"x{j}" for j in range(len(bounds))]
        elif objective == "ise":
            names = list(sec.get("gains", ["Kp", "Ki", "Kd", "k", "k_sc"]))
            fitness = FitnessSpec(build_scenario(doc, dt=dt), tuple(names),
                                  float(sec.get("chattering_weight", 0.0)))
            if "bounds" in sec:
                bounds = sec["bounds"]
            else:
                missing = [n for n in names if n not in DEFAULT_BOUNDS]
                if missing:
                    raise ConfigError(f"no default bounds for {missing}; give [tuning] bounds")
                bounds = [DEFAULT_BOUNDS[n] for n in names]
            fitness.check_bounds(bounds)
        else:
            raise ConfigError(f"unknown tuning objective {objective!r}")
        cfg = SwarmConfig(
            particle_count=int(sec.get("particle_count", 50)),
            subpopulation_count=int(sec.get("subpopulation_count", 5)),
            max_iterations=int(sec.get("max_iterations", 90)),
            bounds=tuple(tuple(b) for b in bounds),
            schedule=sec.get("schedule", "modified"),
            rng_seed=int(seed if seed is not None else sec.get("seed", 0)),
            random_factors=bool(sec.get("random_factors", False)),
            velocity_clamp=float(sec.get("velocity_clamp", 0.2)),
        )
    except ConfigError:
        raise
    except (TuningConfigError, TypeError, ValueError) as exc:
        raise ConfigError(f"tuning: {exc}") from exc
    if not all(math.isfinite(lo) and math.isfinite(hi) for lo, hi in cfg.bounds):
        raise ConfigError("tuning bounds must be finite")
    return cfg, fitness, names

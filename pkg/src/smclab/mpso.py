"""Particle swarm tuners: the modified schedule-driven variant and a standard baseline.

Subpopulations evolve as independent swarms, each with its own RNG stream
derived from ``(seed, subpopulation)``, so results do not depend on the
order in which swarms or particles are evaluated.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .controllers import ControllerSpec
from .sim import Scenario, compute_metrics, simulate


class TuningConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SwarmConfig:
    particle_count: int = 50
    subpopulation_count: int = 5
    max_iterations: int = 90
    bounds: tuple = ((-5.0, 5.0), (-5.0, 5.0))
    schedule: str = "modified"          # or "standard"
    rng_seed: int = 0
    random_factors: bool = False         # r1, r2 inside the modified update
    velocity_clamp: float = 0.2          # fraction of each dimension's range
    c1: float = 2.0                      # standard-PSO acceleration constants
    c2: float = 2.0

    def __post_init__(self):
        if self.particle_count <= 0 or self.max_iterations <= 0:
            raise TuningConfigError("particle_count and max_iterations must be positive")
        if not 0 < self.subpopulation_count <= self.particle_count:
            raise TuningConfigError("subpopulation_count must lie in [1, particle_count]")
        if self.schedule not in ("modified", "standard"):
            raise TuningConfigError(f"unknown schedule {self.schedule!r}")
        b = np.asarray(self.bounds, dtype=float)
        if b.ndim != 2 or b.shape[1] != 2 or b.shape[0] == 0:
            raise TuningConfigError("bounds must be a list of [lo, hi] pairs")
        if not np.all(np.isfinite(b)) or np.any(b[:, 0] >= b[:, 1]):
            raise TuningConfigError("every bound needs finite lo < hi")
        if not self.velocity_clamp > 0:
            raise TuningConfigError("velocity_clamp must be positive")
        object.__setattr__(self, "bounds", tuple((float(lo), float(hi)) for lo, hi in b))

    @property
    def lo(self) -> np.ndarray:
        return np.array([b[0] for b in self.bounds])

    @property
    def hi(self) -> np.ndarray:
        return np.array([b[1] for b in self.bounds])

    @property
    def vmax(self) -> np.ndarray:
        return self.velocity_clamp * (self.hi - self.lo)

    def subpopulation_sizes(self) -> list[int]:
        base, extra = divmod(self.particle_count, self.subpopulation_count)
        return [base + (1 if i < extra else 0) for i in range(self.subpopulation_count)]


@dataclass
class Particle:
    position: np.ndarray
    velocity: np.ndarray
    personal_best: np.ndarray
    personal_best_fitness: float = math.inf
    current_fitness: float = math.inf


@dataclass
class Swarm:
    """Row-per-particle arrays; ``particles()`` gives the per-particle view."""

    X: np.ndarray
    V: np.ndarray
    P: np.ndarray = None
    P_fit: np.ndarray = None
    fit: np.ndarray = None

    def __post_init__(self):
        self.X = np.array(self.X, dtype=float, ndmin=2)
        self.V = np.array(self.V, dtype=float, ndmin=2)
        if self.P is None:
            self.P = self.X.copy()
        if self.P_fit is None:
            self.P_fit = np.full(len(self.X), math.inf)
        if self.fit is None:
            self.fit = np.full(len(self.X), math.inf)

    def particles(self) -> list[Particle]:
        return [Particle(x, v, p, pf, f)
                for x, v, p, pf, f in zip(self.X, self.V, self.P, self.P_fit, self.fit)]

    def best(self) -> tuple[np.ndarray, float]:
        i = int(np.argmin(self.P_fit))
        return self.P[i].copy(), float(self.P_fit[i])


def mpso_coefficients(i: int, t: float, k_max: int) -> tuple[float, float, float]:
    """``(w, C1, C2)``: inertia decays from 1, C1 decays, C2 grows toward 20."""
    if i < 0 or k_max < 1:
        raise ValueError("need i >= 0 and k_max >= 1")
    w = 2.0 - (1.0 + 1.0 / (2.0 * k_max)) ** i
    c1 = math.exp(-0.05 * t)
    g = math.exp(0.05 * t)
    return w, c1, g / (1.0 + 0.05 * g)


def _move(swarm: Swarm, lo, hi, vmax) -> Swarm:
    if vmax is not None:
        np.clip(swarm.V, -vmax, vmax, out=swarm.V)
    swarm.X = swarm.X + swarm.V
    if lo is not None:
        np.clip(swarm.X, lo, hi, out=swarm.X)
    return swarm


def mpso_step(swarm: Swarm, global_best, coefficients, lo=None, hi=None, vmax=None,
              r1=1.0, r2=1.0) -> Swarm:
    """Deterministic update ``V <- w V + C1 (P - X) + C2 (G - X)``, then ``X <- X + V``.

    ``r1``/``r2`` default to one; pass random draws for the randomized reading.
    """
    w, c1, c2 = coefficients
    g = np.asarray(global_best, dtype=float)
    swarm.V = w * swarm.V + c1 * r1 * (swarm.P - swarm.X) + c2 * r2 * (g - swarm.X)
    return _move(swarm, lo, hi, vmax)


def standard_pso_step(swarm: Swarm, global_best, w, c1, c2, r1, r2,
                      lo=None, hi=None, vmax=None) -> Swarm:
    """Classic update ``V <- w V + c1 r1 (P - X) + c2 r2 (G - X)``."""
    g = np.asarray(global_best, dtype=float)
    swarm.V = w * swarm.V + c1 * r1 * (swarm.P - swarm.X) + c2 * r2 * (g - swarm.X)
    return _move(swarm, lo, hi, vmax)


def refresh_bests(swarm: Swarm, fitness: np.ndarray) -> None:
    """Store current fitness and take strict personal-best improvements."""
    swarm.fit = np.asarray(fitness, dtype=float)
    better = swarm.fit < swarm.P_fit
    swarm.P[better] = swarm.X[better]
    swarm.P_fit[better] = swarm.fit[better]


@dataclass
class TuneResult:
    best_position: np.ndarray
    best_fitness: float
    history: list = field(default_factory=list)   # (iteration, best_fitness, best_position)
    subpopulation_bests: list = field(default_factory=list)


def _evaluate(fitness, X) -> np.ndarray:
    out = np.empty(len(X))
    for j, x in enumerate(X):
        try:
            v = float(fitness(x))
        except (ArithmeticError, ValueError):
            v = math.inf
        out[j] = v if math.isfinite(v) else math.inf
    return out


def _init_swarm(cfg: SwarmConfig, size: int, rng) -> Swarm:
    lo, hi, vmax = cfg.lo, cfg.hi, cfg.vmax
    X = rng.uniform(lo, hi, size=(size, len(lo)))
    V = rng.uniform(-vmax, vmax, size=(size, len(lo)))
    return Swarm(X, V)


def tune(config: SwarmConfig, fitness: Callable[[np.ndarray], float]) -> TuneResult:
    """Minimise ``fitness`` over the box; failed evaluations count as ``+inf``."""
    cfg = config
    lo, hi, vmax = cfg.lo, cfg.hi, cfg.vmax
    sizes = cfg.subpopulation_sizes()
    swarms, draws = [], []
    for sp, size in enumerate(sizes):
        init_rng = np.random.default_rng([cfg.rng_seed, sp, 0])
        sw = _init_swarm(cfg, size, init_rng)
        refresh_bests(sw, _evaluate(fitness, sw.X))
        swarms.append(sw)
        draws.append(np.random.default_rng([cfg.rng_seed, sp, 1]))

    def overall():
        bests = [sw.best() for sw in swarms]
        k = min(range(len(bests)), key=lambda j: bests[j][1])
        return bests[k]

    pos, fit = overall()
    history = [(0, fit, pos)]
    dim = len(lo)
    for it in range(1, cfg.max_iterations + 1):
        i = it - 1
        for sw, rng in zip(swarms, draws):
            gbest, _ = sw.best()
            shape = (len(sw.X), dim)
            if cfg.schedule == "modified":
                coeffs = mpso_coefficients(i, i, cfg.max_iterations)
                if cfg.random_factors:
                    mpso_step(sw, gbest, coeffs, lo, hi, vmax,
                              rng.random(shape), rng.random(shape))
                else:
                    mpso_step(sw, gbest, coeffs, lo, hi, vmax)
            else:
                w = mpso_coefficients(i, i, cfg.max_iterations)[0]
                standard_pso_step(sw, gbest, w, cfg.c1, cfg.c2,
                                  rng.random(shape), rng.random(shape), lo, hi, vmax)
            refresh_bests(sw, _evaluate(fitness, sw.X))
        pos, fit = overall()
        history.append((it, fit, pos))
    return TuneResult(pos, fit, history, [sw.best() for sw in swarms])


def sphere(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.dot(x, x))


# gain names a tuning vector may address, split by where they live
SURFACE_GAINS = ("Kp", "Ki", "Kd", "lam")
LAW_GAINS = ("eps", "k", "k_sc", "alpha", "k1", "k2", "eps1", "eps2")
DEFAULT_BOUNDS = {"Kp": (0.0, 200.0), "Ki": (0.0, 50.0), "Kd": (0.0, 5.0),
                  "k": (0.0, 100.0), "k_sc": (0.0, 10.0)}


@dataclass(frozen=True)
class FitnessSpec:
    """ISE of ``scenario`` with the named controller gains replaced per candidate."""

    scenario: Scenario
    gain_names: tuple = ("Kp", "Ki", "Kd", "k", "k_sc")
    chattering_weight: float = 0.0

    def __post_init__(self):
        bad = [g for g in self.gain_names if g not in SURFACE_GAINS + LAW_GAINS]
        if bad:
            raise TuningConfigError(f"unknown tunable gain(s) {bad}")
        if self.chattering_weight < 0:
            raise TuningConfigError("chattering_weight must be non-negative")

    def check_bounds(self, bounds: Sequence) -> None:
        if len(bounds) != len(self.gain_names):
            raise TuningConfigError("one bound pair per tuned gain is required")
        for name, (lo, hi) in zip(self.gain_names, bounds):
            if hi <= 0:
                raise TuningConfigError(f"bounds for {name} exclude every positive value")

    def controller(self, x) -> ControllerSpec:
        spec = self.scenario.controller
        surf = {n: float(v) for n, v in zip(self.gain_names, x) if n in SURFACE_GAINS}
        law = {n: float(v) for n, v in zip(self.gain_names, x) if n in LAW_GAINS}
        new_law = replace(spec.law, **law) if law else spec.law
        return replace(spec, surface=replace(spec.surface, **surf), law=new_law)

    def __call__(self, x) -> float:
        sc = self.scenario.with_controller(self.controller(x))
        traj = simulate(sc)
        if traj.aborted:
            return math.inf
        m = compute_metrics(traj, sc.reference)
        return m.ise + self.chattering_weight * m.chattering_index


def write_convergence_csv(result: TuneResult, path, names: Sequence[str] | None = None) -> None:
    dim = len(result.best_position)
    names = list(names) if names else [f"x{j}" for j in range(dim)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iter", "best_fitness", *names])
        for it, fit, pos in result.history:
            w.writerow([it, f"{fit:.9g}", *(f"{v:.9g}" for v in pos)])

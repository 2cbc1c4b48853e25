import math
import os
import subprocess
import sys

import numpy as np
import pytest

from smclab import ControllerSpec, DisturbanceSpec, Plant, ReachingLawSpec, Scenario, SurfaceGains
from smclab import codec, sim
from smclab.surfaces import ReferenceSignal

from conftest import PI2_LAW

pytestmark = pytest.mark.skipif(sim.BACKEND != "cython", reason="compiled kernel not built")

PD_LAW = ReachingLawSpec("pd_modified", k1=125, eps1=5)
PERTURBED = {"pendulum": "pend_mass", "vdp": "damping_gain", "tank": "discharge_coeff"}
PID = SurfaceGains(105, 4, 0.8)
LAW = ReachingLawSpec(k=35, k_sc=1.5)

CASES = {
    "pid_smc": (Plant("pendulum"), ControllerSpec("pid_smc", PID, LAW), (0.3, 0.0)),
    "pid_smc_sign": (Plant("pendulum"), ControllerSpec(
        "pid_smc", PID, ReachingLawSpec(k=35, k_sc=1.5, switch_fn="sign")), (0.3, 0.0)),
    "power_rate": (Plant("pendulum"), ControllerSpec(
        "pid_smc", PID, ReachingLawSpec("power_rate", k=20, alpha=0.5)), (0.3, 0.0)),
    "equivalent": (Plant("pendulum"), ControllerSpec(
        "equivalent", PID, ReachingLawSpec("exponential", eps=10, k=10)), (0.3, 0.0)),
    "equivalent_bare": (Plant("pendulum"), ControllerSpec("equivalent", PID), (0.3, 0.0)),
    "classical": (Plant("pendulum"), ControllerSpec(
        "classical_smc", SurfaceGains(lam=10), ReachingLawSpec("exponential", k=40, eps=1)),
        (0.3, 0.0)),
    "pi_2smc": (Plant("pendulum"), ControllerSpec("pi_2smc", SurfaceGains(Kp=2, Ki=125), PI2_LAW),
                (math.pi, 0.0)),
    "pd_smc": (Plant("pendulum"), ControllerSpec("pd_smc", SurfaceGains(Kp=25), PD_LAW),
               (0.3, 0.0)),
    "composite": (Plant("pendulum"), ControllerSpec(
        "pi_pd_composite", SurfaceGains(Kp=2, Ki=125), PI2_LAW, pd_surface=SurfaceGains(Kp=80),
        pd_law=PD_LAW, gamma=0.8), (math.pi, 0.0)),
    "pid": (Plant("pendulum"), ControllerSpec("pid", PID), (0.1, 0.0)),
    "clipped": (Plant("pendulum"), ControllerSpec("pid_smc", PID, LAW, u_limit=5.0), (0.1, 0.0)),
    "vdp": (Plant("vdp"), ControllerSpec("pid_smc", SurfaceGains(105, 8, 0.8), LAW),
            (math.pi / 60, 0.0)),
    "tank": (Plant("tank"), ControllerSpec("pid_smc", SurfaceGains(105, 4.2, 0.8), LAW), (10.0,)),
}


@pytest.mark.parametrize("name", sorted(CASES))
@pytest.mark.parametrize("extras", ["plain", "disturbed"])
def test_backends_agree(name, extras):
    plant, spec, x0 = CASES[name]
    kw = {}
    if extras == "disturbed":
        kw = dict(disturbance=DisturbanceSpec("sinusoid", amplitude=2.0, angular_freq=3.0),
                  uncertainty=(0.5, 1.0), perturbation={PERTURBED[plant.kind]: 0.1})
        if plant.kind == "vdp":
            kw["reference"] = ReferenceSignal("sinusoid", amplitude=0.1)
        if plant.kind == "tank":
            kw["reference"] = ReferenceSignal(value=32.0)
    dt = 0.001 if x0[0] == math.pi else 0.01
    sc = Scenario(plant, spec, x0, 1.0, dt, **kw)
    py, cy = sim.simulate(sc, "python"), sim.simulate(sc, "cython")
    assert py.status == cy.status and py.fail_step == cy.fail_step
    assert py.data.shape == cy.data.shape
    scale = np.maximum(np.abs(py.data).max(axis=0), 1.0)
    assert np.all(np.abs(py.data - cy.data) <= 1e-9 * scale)


def test_backends_agree_with_impulse_and_hold():
    plant, spec, x0 = CASES["pid_smc"]
    sc = Scenario(plant, spec, (0.0, 0.0), 1.0, 0.0025,
                  disturbance=DisturbanceSpec.scaled_impulse(1000, 10, fire_time=0.2),
                  control_period=0.01)
    py, cy = sim.simulate(sc, "python"), sim.simulate(sc, "cython")
    assert np.allclose(py.data, cy.data, rtol=1e-9, atol=1e-9)
    assert py.d.max() == pytest.approx(100.0 / 0.01)


def test_backends_agree_on_singular_abort():
    spec = ControllerSpec("pi_2smc", SurfaceGains(Kp=1e-9, Ki=125), PI2_LAW)
    sc = Scenario(Plant("pendulum"), spec, (math.pi, 0.0), 1.0, 0.01)
    py, cy = sim.simulate(sc, "python"), sim.simulate(sc, "cython")
    assert py.status == cy.status == "singular"
    assert py.fail_step == cy.fail_step
    assert np.allclose(py.data, cy.data)


def test_codec_round_trip():
    for plant, spec, _ in CASES.values():
        assert codec.decode_controller(codec.encode_controller(spec)) == spec
        code, arr = codec.encode_plant(plant)
        assert codec.decode_plant(code, arr) == plant


def test_pure_python_fallback_is_selected_by_environment():
    env = dict(os.environ, SMCLAB_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "import smclab.sim as s; print(s.BACKEND)"],
        capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "python"

import math

import pytest

from smclab import ControllerSpec, DisturbanceSpec, Plant, ReachingLawSpec, Scenario, SurfaceGains


@pytest.fixture
def pendulum():
    return Plant("pendulum")


def stabilization(controller=None, **kw):
    controller = controller or ControllerSpec(
        "pid_smc", SurfaceGains(Kp=105, Ki=4, Kd=0.8),
        ReachingLawSpec("power_rate_exponential", k=35, k_sc=1.5))
    kw.setdefault("disturbance", DisturbanceSpec.scaled_impulse(1000, 10))
    return Scenario(Plant("pendulum"), controller, kw.pop("x0", (0.0, 0.0)),
                    kw.pop("duration", 2.0), kw.pop("dt", 0.01), **kw)


PI2_LAW = ReachingLawSpec("second_order_modified", k1=125, k2=95, eps1=5, eps2=5)
HALF_PI = math.pi / 2


def pytest_terminal_summary(terminalreporter):
    module = __import__("sys").modules.get("test_acceptance")
    if module is None or not module.EVALUATED:
        return
    terminalreporter.section("acceptance")
    for line in module.summary_lines():
        terminalreporter.write_line(line)

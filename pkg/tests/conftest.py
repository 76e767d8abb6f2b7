import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from brushagent.geometry import ClosedRegion
from brushagent.training import ShapeContext

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.function_scoped_fixture])
settings.load_profile("default")


def rectangle(w=10.0, h=2.0):
    """w x h box centered on the origin, S on the left and G on the right."""
    return ClosedRegion(np.array([[-w / 2, -h / 2], [w / 2, -h / 2], [w / 2, h / 2], [-w / 2, h / 2]]),
                        start_hint=(-w / 2 + h / 2, 0.0), goal_hint=(w / 2 - h / 2, 0.0))


@pytest.fixture(scope="session")
def rect_ctx():
    return ShapeContext.build("rect", rectangle())


@pytest.fixture(scope="session")
def contexts():
    from brushagent.training import load_shapes
    return {c.name: c for c in load_shapes(["straight", "c_arc_wide", "s_curve", "quarter_ring"])}

"""Shared fixtures for the test suite."""

import pytest

from pilotstack.nn.model import ArchitectureSpec, ConvLayer
from pilotstack.track import CameraModel, default_track
from pilotstack.vehicle import VehicleParams


@pytest.fixture(scope="session")
def track():
    return default_track()


@pytest.fixture
def vehicle():
    return VehicleParams()


@pytest.fixture
def camera():
    return CameraModel()


@pytest.fixture
def tiny_arch():
    """Network small enough that exhaustive finite differences stay cheap."""
    return ArchitectureSpec(
        input_height=12, input_width=16, input_channels=3,
        convs=(ConvLayer(4, 3, 2), ConvLayer(6, 3, 1)),
        hidden_units=(8,), dropout_rate=0.1)


def drive_expert_lap(track, max_steps=600):
    """One scripted-expert lap from the track start, shared across modules."""
    from pilotstack.autopilot import run_loop
    from pilotstack.evalharness import expert_controller
    from pilotstack.track import point_at_arc, tangent_at_arc
    from pilotstack.vehicle import VehicleState

    params = VehicleParams()
    sx, sy = point_at_arc(track, 0.0)
    start = VehicleState(x_m=sx, y_m=sy,
                         heading_rad=tangent_at_arc(track, 0.0), speed_mps=0.0)
    return run_loop({}, None, track, params, CameraModel(), start,
                    max_steps=max_steps,
                    controller=lambda s, f: expert_controller(s, track, params))


@pytest.fixture(scope="session")
def expert_lap(track):
    return drive_expert_lap(track)

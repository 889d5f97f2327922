"""Scripted expert pilot driven by the prograde marker.

Keeps the relative prograde centered on the target line (lateral
channels) and manages approach speed against the uniform-deceleration
braking distance (axial channel). Stateless: every call is a pure
function of the observation, so it is the deterministic source of
synthetic training data and the oracle behind the LLM-agent tests.
"""

from __future__ import annotations

from dataclasses import dataclass

from .episode import ALL_NONE, Action, Observation


@dataclass(frozen=True)
class NavballParams:
    """Tuning constants for the prograde-centering pilot.

    rotation_threshold is the lateral prograde component that triggers a
    correction; approach_speed the closing speed the pilot is willing to
    hold (m/s); vessel_acceleration the assumed deceleration capability
    (m/s^2) — None recomputes max_thrust / current mass every call.
    """

    rotation_threshold: float = 0.08
    approach_speed: float = 10.0
    vessel_acceleration: float | None = None
    max_thrust: float = 8000.0

    def __post_init__(self) -> None:
        if not 0.0 < self.rotation_threshold < 1.0:
            raise ValueError("rotation_threshold must be in (0, 1)")
        if not self.approach_speed > 0.0:
            raise ValueError("approach_speed must be positive")
        if self.vessel_acceleration is not None and not self.vessel_acceleration > 0.0:
            raise ValueError("vessel_acceleration must be positive")
        if not self.max_thrust > 0.0:
            raise ValueError("max_thrust must be positive")


DEFAULT_NAVBALL_PARAMS = NavballParams()


def braking_distance(v0: float, a: float) -> float:
    """Stopping distance v0^2 / (2a) under uniform deceleration a > 0."""
    if not a > 0.0:
        raise ValueError(f"deceleration must be positive, got {a}")
    return v0 * v0 / (2.0 * a)


def navball_action(obs: Observation, params: NavballParams = DEFAULT_NAVBALL_PARAMS) -> Action:
    """One piloting decision from one observation.

    Lateral: a prograde x (or z) component beyond the rotation threshold
    is countered with the opposite translation throttle. Axial: thrust
    forward while separating or while there is still room to brake;
    brake when closing faster than the approach speed; otherwise coast.
    Observations without a prograde yield no action.
    """
    if obs.prograde is None:
        return ALL_NONE

    rt = "none"
    if abs(obs.prograde.x) > params.rotation_threshold:
        rt = "left" if obs.prograde.x > 0.0 else "right"
    dt = "none"
    if abs(obs.prograde.z) > params.rotation_threshold:
        dt = "down" if obs.prograde.z > 0.0 else "up"

    accel = params.vessel_acceleration
    if accel is None:
        accel = params.max_thrust / obs.vehicle_mass

    closing_speed = max(0.0, -obs.range_rate)
    if obs.range_rate >= 0.0 or braking_distance(closing_speed, accel) < obs.range:
        ft = "forward"
    elif closing_speed > params.approach_speed:
        ft = "backward"
    else:
        ft = "none"

    return Action(ft=ft, rt=rt, dt=dt)


class NavballAgent:
    """Agent wrapper around navball_action."""

    def __init__(self, params: NavballParams = DEFAULT_NAVBALL_PARAMS):
        self.params = params

    def get_action(self, obs: Observation) -> Action:
        return navball_action(obs, self.params)

"""Pursuer-evader episode engine.

Owns episode lifecycle (reset/step at the decision cadence), the E3
evader escape policy, observation assembly with prograde augmentation,
closest-approach tracking at integrator substep resolution, and the
composite episode score. One Episode instance is strictly sequential;
distinct instances share nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Protocol

from .orbit import (
    DEFAULT_ENGINE,
    KERBIN,
    ZERO,
    BodyConstants,
    DegenerateStateError,
    EngineParams,
    OrbitConstraints,
    OrbitalElements,
    Vec3,
    VesselState,
    elements_to_state,
    generate_orbit,
    propagate,
    vessel_frame,
)

FT_LABELS = ("backward", "none", "forward")
RT_LABELS = ("left", "none", "right")
DT_LABELS = ("down", "none", "up")


@dataclass(frozen=True)
class Action:
    """Discrete throttle command: one label per axis plus a burn duration."""

    ft: str = "none"
    rt: str = "none"
    dt: str = "none"
    duration: float = 0.5

    def __post_init__(self) -> None:
        if self.ft not in FT_LABELS:
            raise ValueError(f"ft must be one of {FT_LABELS}, got {self.ft!r}")
        if self.rt not in RT_LABELS:
            raise ValueError(f"rt must be one of {RT_LABELS}, got {self.rt!r}")
        if self.dt not in DT_LABELS:
            raise ValueError(f"dt must be one of {DT_LABELS}, got {self.dt!r}")
        if not self.duration > 0.0:
            raise ValueError(f"duration must be positive, got {self.duration}")

    def labels(self) -> tuple[str, str, str]:
        return (self.ft, self.rt, self.dt)


ALL_NONE = Action()

_FT_VALUE = {"backward": -1.0, "none": 0.0, "forward": 1.0}
_RT_VALUE = {"left": -1.0, "none": 0.0, "right": 1.0}
_DT_VALUE = {"down": -1.0, "none": 0.0, "up": 1.0}


def action_to_throttle(action: Action) -> Vec3:
    """Map labels to vessel-frame throttle components in [-1, 1].

    x follows right/left, y follows forward/backward (toward the target),
    z follows up/down.
    """
    return Vec3(_RT_VALUE[action.rt], _FT_VALUE[action.ft], _DT_VALUE[action.dt])


@dataclass(frozen=True)
class Observation:
    """Per-tick mission state handed to agents.

    Positions/velocities are celestial-body frame; prograde is the unit
    relative-velocity direction in the vessel frame, or None when the
    vessels have zero relative velocity (or the frame is degenerate).
    range is the instantaneous separation (m) and range_rate its time
    derivative (m/s, positive when separating).
    """

    time_elapsed: float
    vehicle_mass: float
    vehicle_propellant: float
    pursuer_pos: Vec3
    pursuer_vel: Vec3
    evader_pos: Vec3
    evader_vel: Vec3
    prograde: Vec3 | None
    range: float
    range_rate: float


@dataclass(frozen=True)
class ScoreWeights:
    """Scale and exponent per score component."""

    distance_scale: float = 0.1
    distance_exp: float = 2.0
    velocity_scale: float = 0.5
    velocity_exp: float = 1.5
    fuel_scale: float = 0.1
    fuel_exp: float = 1.25
    time_scale: float = 0.01
    time_exp: float = 1.0

    def __post_init__(self) -> None:
        for name in (
            "distance_scale", "distance_exp", "velocity_scale", "velocity_exp",
            "fuel_scale", "fuel_exp", "time_scale", "time_exp",
        ):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")


DEFAULT_WEIGHTS = ScoreWeights()


def compute_score(
    distance: float,
    velocity: float,
    fuel: float,
    elapsed: float,
    weights: ScoreWeights = DEFAULT_WEIGHTS,
) -> float:
    """Composite episode score: sum of (scale * component) ** exponent.

    Lower is better. All components must be non-negative.
    """
    components = (
        (distance, weights.distance_scale, weights.distance_exp),
        (velocity, weights.velocity_scale, weights.velocity_exp),
        (fuel, weights.fuel_scale, weights.fuel_exp),
        (elapsed, weights.time_scale, weights.time_exp),
    )
    total = 0.0
    for value, scale, exponent in components:
        if value < 0.0:
            raise ValueError(f"score components must be non-negative, got {value}")
        total += (scale * value) ** exponent
    return total


def evader_policy_e3(
    evader_state: VesselState,
    pursuer_state: VesselState,
    threshold: float,
    engine: EngineParams = DEFAULT_ENGINE,
    escape_direction: str = "position-ray",
) -> Vec3:
    """Structured escape: full thrust away once the pursuer is close.

    Zero thrust at or beyond the threshold (strict less-than trigger).
    escape_direction picks the burn ray: "position-ray" burns directly
    away from the pursuer, "prograde" burns along the evader's own
    velocity.
    """
    rel = evader_state.position - pursuer_state.position
    separation = rel.norm()
    if not separation < threshold:
        return ZERO
    if escape_direction == "prograde":
        direction = evader_state.velocity
    else:
        direction = rel
    if direction.norm() == 0.0:
        return ZERO
    return direction.unit() * engine.max_thrust


# The evader's reference orbit is held fixed across episodes; the pursuer's
# orbit is what varies (configured or generated).
DEFAULT_EVADER_ORBIT = OrbitalElements(
    a=750_000.0, e=0.001, i=0.2, omega=0.0, raan=0.0, nu=0.0
)


@dataclass(frozen=True)
class EpisodeConfig:
    """Everything an episode needs: scenario, seeds, dynamics, scoring."""

    scenario_id: str = "pursuer-evader-E3"
    seed: int = 0
    max_duration: float = 240.0
    decision_period: float = 0.5
    substep: float = 0.1
    evader_threshold: float = 400.0
    evader_elements: OrbitalElements = DEFAULT_EVADER_ORBIT
    pursuer_elements: OrbitalElements | None = None
    constraints: OrbitConstraints = OrbitConstraints()
    body: BodyConstants = KERBIN
    engine: EngineParams = DEFAULT_ENGINE
    dry_mass: float = 1000.0
    propellant: float = 1000.0
    score_weights: ScoreWeights = DEFAULT_WEIGHTS
    end_on_fuel_exhausted: bool = False
    evader_escape_direction: str = "position-ray"

    def __post_init__(self) -> None:
        if not self.max_duration > 0.0:
            raise ValueError("max_duration must be positive")
        if not self.decision_period > 0.0:
            raise ValueError("decision_period must be positive")
        if not self.evader_threshold > 0.0:
            raise ValueError("evader_threshold must be positive")
        if not 0.0 < self.substep <= self.decision_period:
            raise ValueError("substep must be in (0, decision_period]")
        n = round(self.decision_period / self.substep)
        if n < 1 or abs(n * self.substep - self.decision_period) > 1e-9:
            raise ValueError("decision_period must be an integer multiple of substep")
        if self.dry_mass < 0.0 or self.propellant < 0.0:
            raise ValueError("masses must be non-negative")
        if self.evader_escape_direction not in ("position-ray", "prograde"):
            raise ValueError(f"unknown escape direction {self.evader_escape_direction!r}")

    @property
    def substeps_per_tick(self) -> int:
        return round(self.decision_period / self.substep)


@dataclass(frozen=True)
class TrajectoryRow:
    """One integrator-substep sample of the relative-motion record."""

    t: float
    pursuer_pos: Vec3
    pursuer_vel: Vec3
    evader_pos: Vec3
    evader_vel: Vec3
    action: Action
    range: float
    range_rate: float
    propellant: float


@dataclass(frozen=True)
class EpisodeResult:
    """Episode summary: the scored components plus the full substep record."""

    closest_distance: float
    speed_at_closest: float
    fuel_used: float
    elapsed: float
    score: float
    trajectory: tuple[TrajectoryRow, ...]
    termination_reason: str
    seed: int


def up_reference(pursuer: VesselState) -> Vec3:
    """Vessel-top reference direction: the pursuer's orbit normal.

    The generated initial geometry puts the target almost exactly along
    the radial, so a radial-out reference would be parallel to the target
    line and the frame degenerate; the orbit normal stays well clear of
    the target line for this scenario class. Falls back to radial-out on
    a (pathological) radial plunge.
    """
    h = pursuer.position.cross(pursuer.velocity)
    if h.norm() <= 1e-9 * pursuer.position.norm() * max(pursuer.velocity.norm(), 1.0):
        return pursuer.position.unit()
    return h.unit()


def build_observation(
    time_elapsed: float, pursuer: VesselState, evader: VesselState
) -> Observation:
    """Assemble the agent-facing observation, including augmentations."""
    rel = evader.position - pursuer.position
    separation = rel.norm()
    rel_vel = evader.velocity - pursuer.velocity
    range_rate = rel.dot(rel_vel) / separation if separation > 0.0 else 0.0

    prograde: Vec3 | None
    try:
        basis = vessel_frame(pursuer.position, evader.position, up_reference(pursuer))
        dv = pursuer.velocity - evader.velocity
        prograde = basis.to_vessel(dv.unit()) if dv.norm() > 0.0 else None
    except DegenerateStateError:
        prograde = None

    return Observation(
        time_elapsed=time_elapsed,
        vehicle_mass=pursuer.mass,
        vehicle_propellant=pursuer.propellant,
        pursuer_pos=pursuer.position,
        pursuer_vel=pursuer.velocity,
        evader_pos=evader.position,
        evader_vel=evader.velocity,
        prograde=prograde,
        range=separation,
        range_rate=range_rate,
    )


class Episode:
    """One pursuer-evader run, stepped at the decision cadence."""

    def __init__(self, config: EpisodeConfig):
        self.config = config
        self._active = False
        self._done = False

    def reset(self) -> Observation:
        cfg = self.config
        pursuer_elements = cfg.pursuer_elements
        if pursuer_elements is None:
            pursuer_elements = generate_orbit(
                cfg.evader_elements, cfg.constraints, rng_seed=cfg.seed, body=cfg.body
            )
        p_pos, p_vel = elements_to_state(pursuer_elements, cfg.body)
        e_pos, e_vel = elements_to_state(cfg.evader_elements, cfg.body)
        wet = cfg.dry_mass + cfg.propellant
        self._pursuer = VesselState(p_pos, p_vel, wet, cfg.propellant)
        self._evader = VesselState(e_pos, e_vel, wet, cfg.propellant)

        self._tick = 0
        self._initial_propellant = cfg.propellant
        self._trajectory: list[TrajectoryRow] = []
        self._closest = (self._pursuer.position - self._evader.position).norm()
        self._speed_at_closest = (self._pursuer.velocity - self._evader.velocity).norm()
        self._active = True
        self._done = False
        self._termination = ""
        return self.observe()

    def observe(self) -> Observation:
        if not self._active:
            raise RuntimeError("reset() must be called before observe()")
        return build_observation(
            self._tick * self.config.decision_period, self._pursuer, self._evader
        )

    @property
    def done(self) -> bool:
        return self._done

    @property
    def closest_so_far(self) -> float:
        return self._closest

    @property
    def speed_at_closest_so_far(self) -> float:
        return self._speed_at_closest

    def step(self, action: Action) -> tuple[Observation, bool]:
        if not self._active:
            raise RuntimeError("reset() must be called before step()")
        if self._done:
            raise RuntimeError("step() called on a finished episode")
        cfg = self.config

        # Orientation and both thrust vectors are held for the whole tick.
        try:
            basis = vessel_frame(
                self._pursuer.position, self._evader.position, up_reference(self._pursuer)
            )
            throttle = action_to_throttle(action)
            pursuer_thrust = basis.to_body(throttle * cfg.engine.max_thrust)
        except DegenerateStateError:
            pursuer_thrust = ZERO
        evader_thrust = evader_policy_e3(
            self._evader,
            self._pursuer,
            cfg.evader_threshold,
            engine=cfg.engine,
            escape_direction=cfg.evader_escape_direction,
        )

        n_sub = cfg.substeps_per_tick
        burn_substeps = min(n_sub, max(0, round(action.duration / cfg.substep)))
        for j in range(n_sub):
            thrust = pursuer_thrust if j < burn_substeps else ZERO
            self._pursuer = propagate(
                self._pursuer, thrust, cfg.body, dt=cfg.substep,
                engine=cfg.engine, step=cfg.substep,
            )
            self._evader = propagate(
                self._evader, evader_thrust, cfg.body, dt=cfg.substep,
                engine=cfg.engine, step=cfg.substep,
            )
            t = self._tick * cfg.decision_period + (j + 1) * cfg.substep
            rel = self._evader.position - self._pursuer.position
            separation = rel.norm()
            rel_vel = self._evader.velocity - self._pursuer.velocity
            rate = rel.dot(rel_vel) / separation if separation > 0.0 else 0.0
            self._trajectory.append(
                TrajectoryRow(
                    t=t,
                    pursuer_pos=self._pursuer.position,
                    pursuer_vel=self._pursuer.velocity,
                    evader_pos=self._evader.position,
                    evader_vel=self._evader.velocity,
                    action=action if j < burn_substeps else ALL_NONE,
                    range=separation,
                    range_rate=rate,
                    propellant=self._pursuer.propellant,
                )
            )
            if separation < self._closest:
                self._closest = separation
                self._speed_at_closest = rel_vel.norm()

        self._tick += 1
        elapsed = self._tick * cfg.decision_period
        if elapsed >= cfg.max_duration - 1e-9:
            self._done = True
            self._termination = "time-limit"
        elif cfg.end_on_fuel_exhausted and self._pursuer.propellant == 0.0:
            self._done = True
            self._termination = "fuel-exhausted"
        return self.observe(), self._done

    def result(self) -> EpisodeResult:
        if not self._done:
            raise RuntimeError("result() is only available after the episode is done")
        cfg = self.config
        fuel_used = self._initial_propellant - self._pursuer.propellant
        elapsed = self._tick * cfg.decision_period
        return EpisodeResult(
            closest_distance=self._closest,
            speed_at_closest=self._speed_at_closest,
            fuel_used=fuel_used,
            elapsed=elapsed,
            score=compute_score(
                self._closest, self._speed_at_closest, fuel_used, elapsed, cfg.score_weights
            ),
            trajectory=tuple(self._trajectory),
            termination_reason=self._termination,
            seed=cfg.seed,
        )


class Agent(Protocol):
    """Anything that picks an Action from an Observation."""

    def get_action(self, obs: Observation) -> Action: ...


class NaiveAgent:
    """Harness fixture: burn at the target every tick, no corrections."""

    def get_action(self, obs: Observation) -> Action:
        return Action(ft="forward")


def run_episode(agent: Agent, config: EpisodeConfig) -> EpisodeResult:
    """Drive one episode to completion with the given agent."""
    episode = Episode(config)
    obs = episode.reset()
    done = False
    while not done:
        obs, done = episode.step(agent.get_action(obs))
    return episode.result()


# --- JSON helpers (logs, reports, and the session service share these) ---

def vec3_to_list(v: Vec3) -> list[float]:
    return [v.x, v.y, v.z]


def vec3_from_list(values: list[float]) -> Vec3:
    return Vec3(float(values[0]), float(values[1]), float(values[2]))


def action_to_dict(action: Action) -> dict:
    return {"ft": action.ft, "rt": action.rt, "dt": action.dt, "duration": action.duration}


def action_from_dict(d: dict) -> Action:
    return Action(
        ft=d.get("ft", "none"),
        rt=d.get("rt", "none"),
        dt=d.get("dt", "none"),
        duration=float(d.get("duration", 0.5)),
    )


def observation_to_dict(obs: Observation) -> dict:
    return {
        "time_elapsed": obs.time_elapsed,
        "vehicle_mass": obs.vehicle_mass,
        "vehicle_propellant": obs.vehicle_propellant,
        "pursuer_pos": vec3_to_list(obs.pursuer_pos),
        "pursuer_vel": vec3_to_list(obs.pursuer_vel),
        "evader_pos": vec3_to_list(obs.evader_pos),
        "evader_vel": vec3_to_list(obs.evader_vel),
        "prograde": vec3_to_list(obs.prograde) if obs.prograde is not None else None,
        "range": obs.range,
        "range_rate": obs.range_rate,
    }


def observation_from_dict(d: dict) -> Observation:
    return Observation(
        time_elapsed=float(d["time_elapsed"]),
        vehicle_mass=float(d["vehicle_mass"]),
        vehicle_propellant=float(d["vehicle_propellant"]),
        pursuer_pos=vec3_from_list(d["pursuer_pos"]),
        pursuer_vel=vec3_from_list(d["pursuer_vel"]),
        evader_pos=vec3_from_list(d["evader_pos"]),
        evader_vel=vec3_from_list(d["evader_vel"]),
        prograde=vec3_from_list(d["prograde"]) if d.get("prograde") is not None else None,
        range=float(d["range"]),
        range_rate=float(d["range_rate"]),
    )


def trajectory_row_to_dict(row: TrajectoryRow) -> dict:
    return {
        "t": row.t,
        "pursuer": {"pos": vec3_to_list(row.pursuer_pos), "vel": vec3_to_list(row.pursuer_vel)},
        "evader": {"pos": vec3_to_list(row.evader_pos), "vel": vec3_to_list(row.evader_vel)},
        "action": action_to_dict(row.action),
        "range": row.range,
        "range_rate": row.range_rate,
        "propellant": row.propellant,
    }


def elements_to_dict(el: OrbitalElements) -> dict:
    return {"a": el.a, "e": el.e, "i": el.i, "omega": el.omega, "raan": el.raan, "nu": el.nu}


def elements_from_dict(d: dict) -> OrbitalElements:
    return OrbitalElements(
        a=float(d["a"]), e=float(d["e"]), i=float(d["i"]),
        omega=float(d["omega"]), raan=float(d["raan"]), nu=float(d["nu"]),
    )


def config_to_dict(cfg: EpisodeConfig) -> dict:
    return {
        "scenario_id": cfg.scenario_id,
        "seed": cfg.seed,
        "max_duration": cfg.max_duration,
        "decision_period": cfg.decision_period,
        "substep": cfg.substep,
        "evader_threshold": cfg.evader_threshold,
        "evader_elements": elements_to_dict(cfg.evader_elements),
        "pursuer_elements": (
            elements_to_dict(cfg.pursuer_elements) if cfg.pursuer_elements else None
        ),
        "constraints": {
            "distance_min": cfg.constraints.distance_min,
            "distance_max": cfg.constraints.distance_max,
            "e_max": cfg.constraints.e_max,
            "inclination_jitter": cfg.constraints.inclination_jitter,
            "radial_fraction_min": cfg.constraints.radial_fraction_min,
            "radial_fraction_max": cfg.constraints.radial_fraction_max,
            "max_attempts": cfg.constraints.max_attempts,
        },
        "body": {"mu": cfg.body.mu, "radius": cfg.body.radius},
        "engine": {"max_thrust": cfg.engine.max_thrust, "max_flow": cfg.engine.max_flow},
        "dry_mass": cfg.dry_mass,
        "propellant": cfg.propellant,
        "score_weights": {
            "distance_scale": cfg.score_weights.distance_scale,
            "distance_exp": cfg.score_weights.distance_exp,
            "velocity_scale": cfg.score_weights.velocity_scale,
            "velocity_exp": cfg.score_weights.velocity_exp,
            "fuel_scale": cfg.score_weights.fuel_scale,
            "fuel_exp": cfg.score_weights.fuel_exp,
            "time_scale": cfg.score_weights.time_scale,
            "time_exp": cfg.score_weights.time_exp,
        },
        "end_on_fuel_exhausted": cfg.end_on_fuel_exhausted,
        "evader_escape_direction": cfg.evader_escape_direction,
    }


def config_from_dict(d: dict) -> EpisodeConfig:
    """Build a config from (possibly partial) JSON, filling defaults.

    Raises ValueError on malformed or invariant-violating input.
    """
    base = EpisodeConfig()
    kwargs: dict = {}
    for key in (
        "scenario_id", "seed", "max_duration", "decision_period", "substep",
        "evader_threshold", "dry_mass", "propellant", "end_on_fuel_exhausted",
        "evader_escape_direction",
    ):
        if key in d:
            kwargs[key] = d[key]
    if d.get("evader_elements"):
        kwargs["evader_elements"] = elements_from_dict(d["evader_elements"])
    if d.get("pursuer_elements"):
        kwargs["pursuer_elements"] = elements_from_dict(d["pursuer_elements"])
    if d.get("constraints"):
        kwargs["constraints"] = OrbitConstraints(**d["constraints"])
    if d.get("body"):
        kwargs["body"] = BodyConstants(**d["body"])
    if d.get("engine"):
        kwargs["engine"] = EngineParams(**d["engine"])
    if d.get("score_weights"):
        kwargs["score_weights"] = ScoreWeights(**d["score_weights"])
    try:
        return replace(base, **kwargs)
    except TypeError as exc:
        raise ValueError(f"malformed episode config: {exc}") from exc

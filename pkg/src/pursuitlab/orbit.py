"""Two-body orbital mechanics core.

Element/state conversions, fixed-step RK4 propagation under thrust,
vessel-frame construction, prograde computation, and seeded random
orbit generation. Everything here is a pure function of its inputs
(plus an explicit seed), uses stdlib floats only, and is safe to call
from any number of concurrent workers.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi


class DegenerateStateError(ValueError):
    """A geometric construction has no well-defined answer for this input."""


class OrbitGenerationError(RuntimeError):
    """The orbit acceptance loop ran out of attempts."""


def _wrap_angle(theta: float) -> float:
    """Normalize an angle to [0, 2*pi)."""
    wrapped = math.fmod(theta, TWO_PI)
    if wrapped < 0.0:
        wrapped += TWO_PI
    return wrapped if wrapped < TWO_PI else 0.0


@dataclass(frozen=True)
class Vec3:
    """Cartesian triple in the celestial-body frame (m or m/s by context)."""

    x: float
    y: float
    z: float

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def __mul__(self, k: float) -> "Vec3":
        return Vec3(self.x * k, self.y * k, self.z * k)

    __rmul__ = __mul__

    def __neg__(self) -> "Vec3":
        return Vec3(-self.x, -self.y, -self.z)

    def dot(self, other: "Vec3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def cross(self, other: "Vec3") -> "Vec3":
        return Vec3(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )

    def norm_sq(self) -> float:
        return self.x * self.x + self.y * self.y + self.z * self.z

    def norm(self) -> float:
        return math.sqrt(self.norm_sq())

    def unit(self) -> "Vec3":
        n = self.norm()
        if n == 0.0:
            raise DegenerateStateError("cannot normalize a zero vector")
        return Vec3(self.x / n, self.y / n, self.z / n)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


ZERO = Vec3(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class BodyConstants:
    """Gravitational parameter (m^3/s^2) and mean radius (m) of the central body."""

    mu: float
    radius: float

    def __post_init__(self) -> None:
        if self.mu <= 0.0 or self.radius <= 0.0:
            raise ValueError(f"body constants must be positive, got {self}")


# Default central body: published game constants for the stock home planet.
KERBIN = BodyConstants(mu=3.5316e12, radius=600_000.0)


@dataclass(frozen=True)
class EngineParams:
    """Thruster group limits shared by both vessels.

    max_thrust is the force of one axis group at full throttle (N);
    max_flow is that group's propellant rate at full throttle (kg/s).
    The mass-flow fraction scales with requested thrust magnitude, so a
    multi-axis burn drains proportionally faster.
    """

    max_thrust: float = 8000.0
    max_flow: float = 1.0

    def __post_init__(self) -> None:
        if self.max_thrust <= 0.0 or self.max_flow < 0.0:
            raise ValueError(f"invalid engine parameters: {self}")


DEFAULT_ENGINE = EngineParams()


@dataclass(frozen=True)
class OrbitalElements:
    """Keplerian elements of an elliptic orbit.

    a: semi-major axis (m), e: eccentricity, i: inclination (rad),
    omega: argument of periapsis (rad), raan: longitude of the ascending
    node (rad), nu: true anomaly (rad). Angles are normalized to [0, 2*pi).
    """

    a: float
    e: float
    i: float
    omega: float
    raan: float
    nu: float

    def __post_init__(self) -> None:
        if not (self.a > 0.0 and math.isfinite(self.a)):
            raise ValueError(f"semi-major axis must be positive and finite, got {self.a}")
        if not (0.0 <= self.e < 1.0):
            raise ValueError(f"only elliptic orbits are supported, got e={self.e}")
        for name in ("i", "omega", "raan", "nu"):
            object.__setattr__(self, name, _wrap_angle(getattr(self, name)))


@dataclass(frozen=True)
class VesselState:
    """Kinematics and mass bookkeeping of one vessel.

    mass is total wet mass (kg); propellant is the burnable fraction of it.
    fuel_exhausted records that a requested burn was clamped to zero
    because the tank ran dry.
    """

    position: Vec3
    velocity: Vec3
    mass: float
    propellant: float
    fuel_exhausted: bool = False

    def __post_init__(self) -> None:
        if self.propellant < 0.0:
            raise ValueError(f"propellant must be non-negative, got {self.propellant}")
        if self.mass < self.propellant:
            raise ValueError("total mass cannot be below propellant mass")

    @property
    def dry_mass(self) -> float:
        return self.mass - self.propellant


@dataclass(frozen=True)
class FrameBasis:
    """Right-handed vessel frame: x right, y toward the target, z up."""

    right: Vec3
    forward: Vec3
    up: Vec3

    def to_vessel(self, v: Vec3) -> Vec3:
        """Express a celestial-body-frame vector in this vessel frame."""
        return Vec3(v.dot(self.right), v.dot(self.forward), v.dot(self.up))

    def to_body(self, v: Vec3) -> Vec3:
        """Express a vessel-frame vector in the celestial-body frame."""
        return self.right * v.x + self.forward * v.y + self.up * v.z


def elements_to_state(el: OrbitalElements, body: BodyConstants) -> tuple[Vec3, Vec3]:
    """Convert Keplerian elements to celestial-body-frame position/velocity.

    Radius follows r = a(1-e^2)/(1+e*cos(nu)); speed satisfies the vis-viva
    relation v = sqrt(mu*(2/r - 1/a)).
    """
    p = el.a * (1.0 - el.e * el.e)
    cos_nu = math.cos(el.nu)
    sin_nu = math.sin(el.nu)
    r = p / (1.0 + el.e * cos_nu)

    vfac = math.sqrt(body.mu / p)
    pos_pf = (r * cos_nu, r * sin_nu, 0.0)
    vel_pf = (-vfac * sin_nu, vfac * (el.e + cos_nu), 0.0)

    co, so = math.cos(el.omega), math.sin(el.omega)
    cO, sO = math.cos(el.raan), math.sin(el.raan)
    ci, si = math.cos(el.i), math.sin(el.i)

    # Rz(raan) @ Rx(i) @ Rz(omega), rows written out.
    rot = (
        (cO * co - sO * so * ci, -cO * so - sO * co * ci, sO * si),
        (sO * co + cO * so * ci, -sO * so + cO * co * ci, -cO * si),
        (so * si, co * si, ci),
    )

    def apply(v: tuple[float, float, float]) -> Vec3:
        return Vec3(
            rot[0][0] * v[0] + rot[0][1] * v[1] + rot[0][2] * v[2],
            rot[1][0] * v[0] + rot[1][1] * v[1] + rot[1][2] * v[2],
            rot[2][0] * v[0] + rot[2][1] * v[1] + rot[2][2] * v[2],
        )

    return apply(pos_pf), apply(vel_pf)


def _signed_angle(frm: Vec3, to: Vec3, axis: Vec3) -> float:
    """Angle from `frm` to `to` about unit `axis`, in [0, 2*pi)."""
    return _wrap_angle(math.atan2(frm.cross(to).dot(axis), frm.dot(to)))


def state_to_elements(position: Vec3, velocity: Vec3, body: BodyConstants) -> OrbitalElements:
    """Recover Keplerian elements from a celestial-body-frame state.

    Degenerate cases use fixed conventions (equatorial: raan=0 and the node
    direction taken along +x; circular: omega=0 and anomaly measured from
    the node), so elements_to_state(state_to_elements(s)) reproduces s even
    when individual element values are not unique.

    Raises DegenerateStateError for (near-)zero angular momentum and
    ValueError for non-elliptic states.
    """
    r = position.norm()
    if r == 0.0:
        raise DegenerateStateError("position at the body center")
    v_sq = velocity.norm_sq()

    h = position.cross(velocity)
    h_norm = h.norm()
    if h_norm <= 1e-9 * r * max(math.sqrt(v_sq), 1.0):
        raise DegenerateStateError("degenerate angular momentum (radial trajectory)")
    h_hat = h.unit()

    energy = 0.5 * v_sq - body.mu / r
    if energy >= 0.0:
        raise ValueError("state is not elliptic (non-negative specific energy)")
    a = -body.mu / (2.0 * energy)

    e_vec = (position * (v_sq - body.mu / r) - velocity * position.dot(velocity)) * (1.0 / body.mu)
    e = e_vec.norm()
    if e >= 1.0:
        raise ValueError(f"state is not elliptic, eccentricity {e}")

    i = math.acos(max(-1.0, min(1.0, h.z / h_norm)))

    node = Vec3(-h.y, h.x, 0.0)  # z_hat x h
    if node.norm() <= 1e-12 * h_norm:
        node_dir = Vec3(1.0, 0.0, 0.0)
        raan = 0.0
    else:
        node_dir = node.unit()
        raan = _wrap_angle(math.atan2(node.y, node.x))

    if e < 1e-12:
        peri_dir = node_dir
        omega = 0.0
    else:
        peri_dir = e_vec.unit()
        omega = _signed_angle(node_dir, peri_dir, h_hat)

    nu = _signed_angle(peri_dir, position.unit(), h_hat)
    return OrbitalElements(a=a, e=e, i=i, omega=omega, raan=raan, nu=nu)


def propagate(
    state: VesselState,
    thrust_body_frame: Vec3,
    body: BodyConstants,
    dt: float,
    engine: EngineParams = DEFAULT_ENGINE,
    step: float = 0.1,
) -> VesselState:
    """Advance one vessel by dt seconds under constant body-frame thrust.

    Fixed-step 4th-order Runge-Kutta on (position, velocity, propellant)
    with acceleration -mu*r/|r|^3 + thrust/mass and propellant rate
    (|thrust|/max_thrust)*max_flow. If the tank empties mid-way, thrust is
    clamped to zero for the remainder and the returned state is flagged.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    thrust_mag = thrust_body_frame.norm()
    if thrust_mag > engine.max_thrust * math.sqrt(3.0) * (1.0 + 1e-9):
        raise ValueError(f"thrust magnitude {thrust_mag} exceeds engine capability")

    n_steps = max(1, round(dt / step))
    h = dt / n_steps
    dry = state.dry_mass
    mu = body.mu

    flow = (thrust_mag / engine.max_thrust) * engine.max_flow
    pos, vel, prop = state.position, state.velocity, state.propellant
    exhausted = state.fuel_exhausted

    for _ in range(n_steps):
        if prop <= 0.0 and thrust_mag > 0.0:
            thrust, rate = ZERO, 0.0
            exhausted = True
        else:
            thrust, rate = thrust_body_frame, flow

        def deriv(p: Vec3, v: Vec3, m_prop: float) -> tuple[Vec3, Vec3, float]:
            r3 = p.norm() ** 3
            m = dry + max(m_prop, 0.0)
            acc = p * (-mu / r3) + thrust * (1.0 / m)
            return v, acc, -rate

        k1p, k1v, k1m = deriv(pos, vel, prop)
        k2p, k2v, k2m = deriv(pos + k1p * (h / 2), vel + k1v * (h / 2), prop + k1m * (h / 2))
        k3p, k3v, k3m = deriv(pos + k2p * (h / 2), vel + k2v * (h / 2), prop + k2m * (h / 2))
        k4p, k4v, k4m = deriv(pos + k3p * h, vel + k3v * h, prop + k3m * h)

        pos = pos + (k1p + 2.0 * k2p + 2.0 * k3p + k4p) * (h / 6.0)
        vel = vel + (k1v + 2.0 * k2v + 2.0 * k3v + k4v) * (h / 6.0)
        prop = prop + (k1m + 2.0 * k2m + 2.0 * k3m + k4m) * (h / 6.0)
        if prop < 0.0:
            prop = 0.0
            if rate > 0.0:
                exhausted = True

    return VesselState(
        position=pos,
        velocity=vel,
        mass=dry + prop,
        propellant=prop,
        fuel_exhausted=exhausted,
    )


def vessel_frame(p_p: Vec3, p_e: Vec3, vessel_up: Vec3) -> FrameBasis:
    """Build the pursuer's vessel frame from positions and an up reference.

    forward points at the target; up is vessel_up orthogonalized against
    forward (Gram-Schmidt) so the basis is a true rotation; right completes
    the right-handed triple (right = forward x up).
    """
    line = p_e - p_p
    if line.norm() == 0.0:
        raise DegenerateStateError("coincident vessels: target direction undefined")
    forward = line.unit()

    up_norm = vessel_up.norm()
    if up_norm == 0.0:
        raise DegenerateStateError("zero vessel_up reference")
    up_raw = vessel_up - forward * vessel_up.dot(forward)
    if up_raw.norm() <= 1e-9 * up_norm:
        raise DegenerateStateError("vessel_up is parallel to the target line")
    up = up_raw.unit()
    right = forward.cross(up)
    return FrameBasis(right=right, forward=forward, up=up)


def compute_prograde(p_p: Vec3, p_e: Vec3, v_p: Vec3, v_e: Vec3, vessel_up: Vec3) -> Vec3:
    """Unit direction of the pursuer's velocity relative to the evader,
    expressed in the pursuer's vessel frame.

    Raises DegenerateStateError when the relative velocity is zero; the
    caller substitutes a "no prograde" observation flag.
    """
    dv = v_p - v_e
    if dv.norm() == 0.0:
        raise DegenerateStateError("zero relative velocity: prograde undefined")
    basis = vessel_frame(p_p, p_e, vessel_up)
    return basis.to_vessel(dv.unit())


@dataclass(frozen=True)
class OrbitConstraints:
    """Acceptance envelope for randomized pursuer orbits.

    Separation from the evader must land in [distance_min, distance_max]
    meters. Eccentricity is sampled in [0, e_max], inclination within
    +/- inclination_jitter radians of the evader's plane, and the radial
    offset as a fraction of the sampled distance.
    """

    distance_min: float = 700.0
    distance_max: float = 3000.0
    e_max: float = 0.005
    inclination_jitter: float = 0.002
    radial_fraction_min: float = 0.1
    radial_fraction_max: float = 0.5
    max_attempts: int = 10_000

    def __post_init__(self) -> None:
        if not (0.0 < self.distance_min < self.distance_max):
            raise ValueError("need 0 < distance_min < distance_max")
        if not (0.0 <= self.e_max < 1.0):
            raise ValueError("need 0 <= e_max < 1")
        if not (0.0 <= self.radial_fraction_min <= self.radial_fraction_max):
            raise ValueError("invalid radial fraction range")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be at least 1")


def generate_orbit(
    evader: OrbitalElements,
    constraints: OrbitConstraints,
    rng_seed: int,
    body: BodyConstants = KERBIN,
) -> OrbitalElements:
    """Sample a pursuer orbit near the evader, rejection-style.

    Each attempt draws eccentricity, an inclination offset, a target
    separation, and a radial fraction of that separation; the candidate's
    periapsis radius is the evader's current radius plus the radial offset,
    its in-plane phase is co-located with the evader (omega absorbs the
    evader's true anomaly), and its true anomaly is zero. The candidate is
    accepted only if the instantaneous separation, recomputed through
    elements_to_state, lands inside the constraint band. Deterministic for
    a fixed seed.
    """
    rng = random.Random(rng_seed)
    evader_pos, _ = elements_to_state(evader, body)
    evader_radius = evader_pos.norm()

    for _ in range(constraints.max_attempts):
        ecc = rng.uniform(0.0, constraints.e_max)
        incl_offset = rng.uniform(-constraints.inclination_jitter, constraints.inclination_jitter)
        distance = rng.uniform(constraints.distance_min, constraints.distance_max)
        fraction = rng.uniform(constraints.radial_fraction_min, constraints.radial_fraction_max)

        periapsis_radius = evader_radius + fraction * distance
        a = periapsis_radius / (1.0 - ecc)
        if a <= body.radius:
            continue
        candidate = OrbitalElements(
            a=a,
            e=ecc,
            i=min(max(evader.i + incl_offset, 0.0), math.pi - 1e-12),
            omega=evader.omega + evader.nu,
            raan=evader.raan,
            nu=0.0,
        )
        pos, _ = elements_to_state(candidate, body)
        separation = (pos - evader_pos).norm()
        if constraints.distance_min <= separation <= constraints.distance_max:
            return candidate

    raise OrbitGenerationError(
        f"no orbit satisfied {constraints} within {constraints.max_attempts} attempts"
    )

"""1-D leader-follower environment with OU-generated leader profiles.

Fixed 0.1 s steps, bumper-to-bumper gap bookkeeping, and the 4-component
normalized observation fed to every learned policy.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .config import LEADER_OU, OuParams, RewardConfig, SimConfig
from .reward import reward_total

# Reward assigned on the collision step; the safety term saturates at -1
# as the gap closes, so this is its limit value.
COLLISION_REWARD = -1.0


def normalize_state(v, a, v_l, g, cfg: SimConfig):
    """Map raw (v, accel, leader v, gap) to the dimensionless 4-vector
    (v/v_des, (a - a_min)/(a_max - a_min), (v_l - v)/v_des, g/g_max).

    The gap is clamped into [0, g_max] before division so the last
    component stays in [0, 1] even on the step that trips the gap > g_max
    termination.
    """
    for name, x in (("v", v), ("a", a), ("v_l", v_l), ("g", g)):
        if not math.isfinite(x):
            raise ValueError(f"non-finite input {name}={x}")
    g = min(max(g, 0.0), cfg.g_max)
    return np.array([
        v / cfg.v_des,
        (a - cfg.a_min) / (cfg.a_max - cfg.a_min),
        (v_l - v) / cfg.v_des,
        g / cfg.g_max,
    ])


def ou_path(params: OuParams, n_steps, dt, seed=None, rng=None):
    """Euler-Maruyama discretization of an Ornstein-Uhlenbeck process:
    x_{k+1} = x_k + theta*(mu - x_k)*dt + sigma*sqrt(dt)*xi_k.

    Returns n_steps samples starting at x0; deterministic for a fixed seed.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if rng is None:
        rng = np.random.default_rng(seed)
    x = np.empty(n_steps)
    x[0] = params.x0
    if n_steps > 1:
        noise = params.sigma * math.sqrt(dt) * rng.standard_normal(n_steps - 1)
        for k in range(n_steps - 1):
            x[k + 1] = x[k] + params.theta * (params.mu - x[k]) * dt + noise[k]
    return x


class OuNoise:
    """Stateful OU exploration noise in normalized action units."""

    def __init__(self, params: OuParams, dt):
        self.params = params
        self.dt = dt
        self.x = params.x0

    def reset(self):
        self.x = self.params.x0

    def sample(self, rng):
        p = self.params
        self.x += p.theta * (p.mu - self.x) * self.dt \
            + p.sigma * math.sqrt(self.dt) * rng.standard_normal()
        return self.x


def gen_leader_profile(seed, duration, cfg: SimConfig, ou: OuParams = LEADER_OU):
    """OU speed trajectory starting at 0 m/s, clamped to [0, v_des] with
    implied accelerations held within [a_min, a_max]."""
    if duration <= 0:
        raise ValueError("duration must be positive")
    n = max(1, int(round(duration / cfg.dt)))
    raw = ou_path(OuParams(ou.theta, ou.sigma, ou.mu, 0.0), n, cfg.dt, seed=seed)
    v = np.empty(n)
    v[0] = 0.0
    for k in range(1, n):
        lo = v[k - 1] + cfg.a_min * cfg.dt
        hi = v[k - 1] + cfg.a_max * cfg.dt
        v[k] = min(max(min(max(raw[k], lo), hi), 0.0), cfg.v_des)
    return v


def write_leader_csv(path, profile, dt):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_s", "v_mps"])
        for k, v in enumerate(profile):
            w.writerow([repr(k * dt), repr(float(v))])


def read_leader_csv(path):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != ["t_s", "v_mps"]:
            raise ValueError(f"unexpected leader CSV header: {header}")
        return np.array([float(row[1]) for row in r])


@dataclass
class VehicleState:
    position: float = 0.0   # m, front-bumper reference
    speed: float = 0.0      # m/s
    accel: float = 0.0      # m/s^2


@dataclass
class StepInfo:
    t: float
    gap: float
    v: float
    v_l: float
    accel: float
    jerk: float
    collision: bool


class FollowEnv:
    """Deterministic longitudinal leader-follower world.

    Episodes terminate on collision (gap <= 0), on gap > g_max, or after
    max_steps; reset rejects leader profiles too short to cover a full
    episode.
    """

    def __init__(self, cfg: SimConfig = None, rcfg: RewardConfig = None):
        self.cfg = cfg or SimConfig()
        self.rcfg = rcfg or RewardConfig()
        self.leader = VehicleState()
        self.follower = VehicleState()
        self.profile = None
        self.step_index = 0
        self.prev_accel = 0.0
        self.done = True

    def reset(self, profile, seed=None, initial_gap=None, follower_speed=0.0):
        """Start a new episode: both speeds 0 (unless overridden), gap
        drawn uniform from the configured range under the given seed."""
        cfg = self.cfg
        profile = np.asarray(profile, dtype=float)
        if len(profile) - 1 < cfg.max_steps:
            raise ValueError(
                f"leader profile has {len(profile)} samples; an episode of "
                f"{cfg.max_steps} steps needs at least {cfg.max_steps + 1}")
        if initial_gap is None:
            rng = np.random.default_rng(seed)
            initial_gap = rng.uniform(cfg.init_gap_low, cfg.init_gap_high)
        self.profile = profile
        self.step_index = 0
        self.prev_accel = 0.0
        self.done = False
        self.follower = VehicleState(0.0, float(follower_speed), 0.0)
        self.leader = VehicleState(initial_gap + cfg.vehicle_length, float(profile[0]), 0.0)
        return self._observe()

    @property
    def gap(self):
        return self.leader.position - self.follower.position - self.cfg.vehicle_length

    def _observe(self):
        return normalize_state(self.follower.speed, self.follower.accel,
                               self.leader.speed, self.gap, self.cfg)

    def step(self, action):
        if self.done:
            raise RuntimeError("step() called on a finished episode; reset first")
        cfg = self.cfg
        a_cmd = min(max(float(action), cfg.a_min), cfg.a_max)

        # Reduce the applied accel so speed never undershoots zero.
        v = self.follower.speed
        a_app = a_cmd if v + a_cmd * cfg.dt >= 0 else -v / cfg.dt
        v_new = max(0.0, v + a_app * cfg.dt)
        self.follower.position += 0.5 * (v + v_new) * cfg.dt
        self.follower.speed = v_new

        i = self.step_index
        vl_old = self.profile[i]
        vl_new = self.profile[i + 1]
        self.leader.position += 0.5 * (vl_old + vl_new) * cfg.dt
        self.leader.speed = float(vl_new)
        self.leader.accel = (vl_new - vl_old) / cfg.dt

        jerk = 0.0 if i == 0 else (a_app - self.prev_accel) / cfg.dt
        self.follower.accel = a_app
        self.prev_accel = a_app
        self.step_index = i + 1

        gap = self.gap
        collision = gap <= 0.0
        if collision:
            reward = COLLISION_REWARD
        else:
            reward = reward_total(v_new, float(vl_new), gap, jerk, self.rcfg).total

        out_of_range = gap > cfg.g_max
        self.done = collision or out_of_range or self.step_index >= cfg.max_steps
        info = StepInfo(self.step_index * cfg.dt, gap, v_new, float(vl_new),
                        a_app, jerk, collision)
        return self._observe(), reward, self.done, info

"""Scenario execution, time-to-collision analysis, and comparison reports.

A scenario is a leader speed profile plus initial conditions; any object
with an ``act(v, a, v_l, g)`` method can follow it.  TTC statistics are
computed over finite values under a threshold (default 10 s), with TTC
under 2 s counted as safety-critical.
"""

import csv
import dataclasses
import math
import os
from dataclasses import dataclass

import numpy as np

from .config import LEADER_OU, RewardConfig, SimConfig
from .simcore import FollowEnv, gen_leader_profile


def ttc(gap, v_f, v_l):
    """Time to collision gap/(v_f - v_l) while closing; None otherwise."""
    if gap <= 0:
        raise ValueError("ttc requires gap > 0")
    if v_f > v_l:
        return gap / (v_f - v_l)
    return None


@dataclass
class TtcSummary:
    threshold: float
    minimum: float
    mean: float
    median: float
    std: float
    count_below_2s: int
    n_samples: int


@dataclass
class RunTrace:
    agent: str
    t: np.ndarray
    v_leader: np.ndarray
    v_follower: np.ndarray
    gap: np.ndarray
    accel: np.ndarray
    jerk: np.ndarray
    reward: np.ndarray
    ttc: np.ndarray          # NaN where not on a collision course
    collided: bool = False

    def mean_gap(self):
        return float(np.mean(self.gap))


def ttc_summary(trace: RunTrace, threshold=10.0, sample_std=False):
    """Statistics over finite TTC values <= threshold.  An empty selection
    is flagged with n_samples = 0 and NaN statistics rather than raised."""
    vals = trace.ttc[np.isfinite(trace.ttc)]
    vals = vals[vals <= threshold]
    below2 = int(np.sum(vals < 2.0))
    if len(vals) == 0:
        nan = float("nan")
        return TtcSummary(threshold, nan, nan, nan, nan, 0, 0)
    # exactly-rounded accumulation so any independent recomputation agrees
    # bit-for-bit regardless of summation order
    n = len(vals)
    mean = math.fsum(vals) / n
    ddof = 1 if sample_std and n > 1 else 0
    std = math.sqrt(math.fsum((v - mean) ** 2 for v in vals) / (n - ddof))
    return TtcSummary(threshold, float(np.min(vals)), mean,
                      float(np.median(vals)), std, below2, n)


@dataclass
class Scenario:
    name: str
    profile: np.ndarray      # leader speed at dt spacing
    initial_gap: float
    follower_speed: float = 0.0

    @property
    def duration(self):
        return (len(self.profile) - 1) * 0.1


def run_scenario(agent, sc: Scenario, cfg: SimConfig = None,
                 rcfg: RewardConfig = None):
    """Deterministic greedy rollout of the agent through the scenario.

    Collision terminates the trace with the collided flag set.
    """
    cfg = cfg or SimConfig()
    cfg = dataclasses.replace(cfg, max_steps=len(sc.profile) - 1)
    env = FollowEnv(cfg, rcfg or RewardConfig())
    env.reset(sc.profile, initial_gap=sc.initial_gap,
              follower_speed=sc.follower_speed)
    rows = []
    collided = False
    done = False
    while not done:
        action = agent.act(env.follower.speed, env.follower.accel,
                           env.leader.speed, env.gap)
        _, reward, done, info = env.step(action)
        tc = ttc(info.gap, info.v, info.v_l) if info.gap > 0 else None
        rows.append((info.t, info.v_l, info.v, info.gap, info.accel,
                     info.jerk, reward, math.nan if tc is None else tc))
        if info.collision:
            collided = True
    cols = [np.array(c) for c in zip(*rows)]
    return RunTrace(getattr(agent, "name", type(agent).__name__), *cols,
                    collided=collided)


def self_defined_profile(dt=0.1):
    """Built-in safety-critical scenario: standstill start at a 50 m gap,
    leader ramps to 18 m/s from t = 18 s, cruises, brakes at -5 m/s^2 from
    t = 48 s to standstill, then two gentler +-2 m/s^2 trapezoids."""
    def speed(t):
        if t < 18.0:
            return 0.0
        if t < 27.0:
            return 2.0 * (t - 18.0)
        if t < 48.0:
            return 18.0
        if t < 51.6:
            return 18.0 - 5.0 * (t - 48.0)
        if t < 58.0:
            return 0.0
        if t < 63.0:
            return 2.0 * (t - 58.0)
        if t < 68.0:
            return 10.0
        if t < 73.0:
            return 10.0 - 2.0 * (t - 68.0)
        if t < 78.0:
            return 0.0
        if t < 82.0:
            return 2.0 * (t - 78.0)
        if t < 86.0:
            return 8.0
        if t < 90.0:
            return 8.0 - 2.0 * (t - 86.0)
        return 0.0

    n = int(round(100.0 / dt)) + 1
    profile = np.array([speed(k * dt) for k in range(n)])
    return Scenario("builtin-s53", profile, initial_gap=50.0, follower_speed=0.0)


def synthetic_suite(n_scenarios=20, seed=0, cfg: SimConfig = None,
                    leader_ou=LEADER_OU, duration=100.0):
    """Seeded suite of OU-leader scenarios with varied initial gaps."""
    cfg = cfg or SimConfig()
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n_scenarios):
        profile = gen_leader_profile(int(rng.integers(0, 2 ** 31 - 1)),
                                     duration + cfg.dt, cfg, leader_ou)
        gap0 = float(rng.uniform(10.0, cfg.init_gap_high))
        out.append(Scenario(f"synthetic-{k:02d}", profile, gap0))
    return out


def scenario_from_episode(ep, name=None):
    """Replay scenario: recorded leader speeds with the recorded initial
    gap and follower speed."""
    profile = np.array([r.v_leader for r in ep.records])
    return Scenario(name or f"replay-{ep.id}", profile,
                    initial_gap=ep.records[0].gap,
                    follower_speed=ep.records[0].v_follower)


def replay_gap_rmse(agent, ep, cfg: SimConfig = None):
    """Gap RMSE of a simulated follower against the recorded follower."""
    trace = run_scenario(agent, scenario_from_episode(ep), cfg)
    recorded = np.array([r.gap for r in ep.records[1:len(trace.t) + 1]])
    return float(np.sqrt(np.mean((trace.gap - recorded) ** 2)))


TRACE_COLUMNS = ["t", "v_leader", "v_follower", "gap", "accel", "jerk",
                 "reward", "ttc"]
SUMMARY_COLUMNS = ["agent", "minimum", "mean", "median", "std_dev",
                   "count_below_2s", "n_samples", "collided", "mean_gap"]


def compare_report(traces, out_dir, threshold=10.0, sample_std=False):
    """Emit per-agent trace CSVs, a TTC summary table, and a plot-ready
    long-format CSV (t, agent, series, value)."""
    if not traces:
        raise ValueError("need at least one trace")
    os.makedirs(out_dir, exist_ok=True)
    summary_path = os.path.join(out_dir, "ttc_summary.csv")
    with open(summary_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_COLUMNS)
        for name, trace in traces.items():
            s = ttc_summary(trace, threshold, sample_std)
            w.writerow([name, repr(float(s.minimum)), repr(float(s.mean)), repr(float(s.median)),
                        repr(float(s.std)), s.count_below_2s, s.n_samples,
                        int(trace.collided), repr(trace.mean_gap())])
    for name, trace in traces.items():
        with open(os.path.join(out_dir, f"trace_{name}.csv"), "w",
                  newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRACE_COLUMNS)
            for row in zip(trace.t, trace.v_leader, trace.v_follower,
                           trace.gap, trace.accel, trace.jerk, trace.reward,
                           trace.ttc):
                w.writerow([repr(float(x)) for x in row])
    with open(os.path.join(out_dir, "long.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "agent", "series", "value"])
        for name, trace in traces.items():
            for series in ("v_leader", "v_follower", "gap", "ttc"):
                for t, x in zip(trace.t, getattr(trace, series)):
                    w.writerow([repr(float(t)), name, series, repr(float(x))])
    return summary_path


def read_trace_csv(path, agent="loaded"):
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        if next(r) != TRACE_COLUMNS:
            raise ValueError(f"unexpected trace header in {path}")
        cols = [np.array(c, dtype=float) for c in zip(*list(r))]
    return RunTrace(agent, *cols)

"""Car-following trajectory ingestion and relabeling into RL transitions.

Recorded (leader speed, follower speed, gap) rows at 10 Hz become
(s, a, r, s', done) tuples: actions recovered by forward-differencing the
follower speed, rewards recomputed with the exact reward code path used
online, episode boundaries marked terminal so learning never bootstraps
across recordings.
"""

import csv
import glob
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .config import RewardConfig, SimConfig
from .ddpg import ReplayBuffer, Transition
from .reward import reward_total
from .simcore import normalize_state

HEADER = ["t_s", "v_leader_mps", "v_follower_mps", "gap_m"]


@dataclass
class TrajectoryRecord:
    t: float
    v_leader: float
    v_follower: float
    gap: float


@dataclass
class FollowingEpisode:
    id: str
    records: list
    source: str = "synthetic"   # napoli-format | ngsim-format | synthetic

    def __len__(self):
        return len(self.records)


@dataclass
class RelabeledDataset:
    transitions: list
    provenance: list = field(default_factory=list)  # (episode_id, count)
    clipped_actions: int = 0

    def __len__(self):
        return len(self.transitions)

    def to_buffer(self):
        buf = ReplayBuffer(max(1, len(self.transitions)))
        buf.extend(self.transitions)
        return buf


def parse_trajectory_csv(path, dt=0.1, source="napoli-format"):
    """Read one leader-follower episode; rejects malformed rows (naming
    the line number), negative speeds/gaps, and non-uniform timestamps
    (tolerance 1e-6 s against the expected dt)."""
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != HEADER:
            raise ValueError(f"{path}: expected header {','.join(HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 4:
                raise ValueError(f"{path}: line {lineno}: expected 4 fields")
            try:
                t, v_l, v_f, g = (float(x) for x in row)
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: non-numeric field") from None
            if v_l < 0 or v_f < 0:
                raise ValueError(f"{path}: line {lineno}: negative speed")
            if g < 0:
                raise ValueError(f"{path}: line {lineno}: negative gap")
            if records and abs((t - records[-1].t) - dt) > 1e-6:
                raise ValueError(
                    f"{path}: line {lineno}: timestamp spacing "
                    f"{t - records[-1].t:.6g} s != {dt} s (use --dt to override)")
            records.append(TrajectoryRecord(t, v_l, v_f, g))
    if len(records) < 2:
        raise ValueError(f"{path}: an episode needs at least 2 rows")
    return FollowingEpisode(os.path.splitext(os.path.basename(path))[0],
                            records, source)


def write_trajectory_csv(path, episode: FollowingEpisode):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(HEADER)
        for rec in episode.records:
            w.writerow([repr(float(rec.t)), repr(float(rec.v_leader)),
                        repr(float(rec.v_follower)), repr(float(rec.gap))])


def build_transitions(ep: FollowingEpisode, cfg: SimConfig, rcfg: RewardConfig):
    """Relabel one episode into N-2 transitions.

    For row index t in [1, N-2]: action a_t = (v_{t+1} - v_t)/dt clipped
    to the feasible range, jerk from the previous recovered action, state
    from row t (holding the t-1 action as current accel), reward scored on
    the post-action row t+1, matching the simulator's convention.
    """
    n = len(ep.records)
    if n < 3:
        raise ValueError("episode too short to relabel (need >= 3 rows)")
    dt = cfg.dt
    v = np.array([r.v_follower for r in ep.records])
    v_l = np.array([r.v_leader for r in ep.records])
    gap = np.array([r.gap for r in ep.records])
    accel = (v[1:] - v[:-1]) / dt                       # a_t for t in [0, N-2]
    clipped = int(np.sum((accel < cfg.a_min) | (accel > cfg.a_max)))
    accel = np.clip(accel, cfg.a_min, cfg.a_max)

    transitions = []
    for t in range(1, n - 1):
        a_t = float(accel[t])
        jerk = (accel[t] - accel[t - 1]) / dt
        state = normalize_state(v[t], accel[t - 1], v_l[t], gap[t], cfg)
        next_state = normalize_state(v[t + 1], a_t, v_l[t + 1], gap[t + 1], cfg)
        r = reward_total(v[t + 1], v_l[t + 1], gap[t + 1], float(jerk), rcfg).total
        transitions.append(Transition(state, a_t, r, next_state, t == n - 2))
    return RelabeledDataset(transitions, [(ep.id, len(transitions))], clipped)


def relabel_episodes(episodes, cfg: SimConfig, rcfg: RewardConfig):
    parts = [build_transitions(ep, cfg, rcfg) for ep in episodes]
    return RelabeledDataset(
        [tr for p in parts for tr in p.transitions],
        [prov for p in parts for prov in p.provenance],
        sum(p.clipped_actions for p in parts))


def split_train_eval(parts, frac=0.95, seed=0):
    """Split a list of per-episode RelabeledDatasets ~95/5 by episode.

    With fewer than 20 episodes the split falls back to contiguous
    transition blocks inside each episode, so the eval share is never
    empty.  Deterministic under the seed.
    """
    if not parts or all(len(p) == 0 for p in parts):
        raise ValueError("nothing to split")
    rng = np.random.default_rng(seed)
    if len(parts) >= 20:
        order = rng.permutation(len(parts))
        total = sum(len(p) for p in parts)
        train_parts, eval_parts, tally = [], [], 0
        for i in order:
            if tally < frac * total:
                train_parts.append(parts[i])
                tally += len(parts[i])
            else:
                eval_parts.append(parts[i])
        if not eval_parts:
            eval_parts.append(train_parts.pop())
        return merge_parts(train_parts), merge_parts(eval_parts)
    train, evl = RelabeledDataset([]), RelabeledDataset([])
    for p in parts:
        cut = int(round(frac * len(p)))
        cut = min(max(cut, 0), len(p) - 1) if len(p) > 1 else len(p)
        train.transitions += p.transitions[:cut]
        evl.transitions += p.transitions[cut:]
        train.provenance += [(p.provenance[0][0], cut)]
        evl.provenance += [(p.provenance[0][0], len(p) - cut)]
        train.clipped_actions += p.clipped_actions
    return train, evl


def merge_parts(parts):
    return RelabeledDataset(
        [tr for p in parts for tr in p.transitions],
        [prov for p in parts for prov in p.provenance],
        sum(p.clipped_actions for p in parts))


def reward_histogram(ds: RelabeledDataset, bin_width=0.05, lo=-1.0, hi=0.5):
    """Bin counts over [lo, hi] at fixed width plus under/overflow bins;
    also reports the fraction of good actions (r >= 0.4) and of exactly
    zero reward."""
    if len(ds) == 0:
        raise ValueError("empty dataset")
    rewards = np.array([tr.reward for tr in ds.transitions])
    n_bins = int(round((hi - lo) / bin_width))
    edges = lo + bin_width * np.arange(n_bins + 1)
    counts = np.zeros(n_bins + 2, dtype=int)     # [underflow, bins..., overflow]
    for r in rewards:
        if r < lo:
            counts[0] += 1
        elif r > hi:
            counts[-1] += 1
        else:
            # hi itself (the attainable maximum) falls in the top regular bin
            counts[1 + min(n_bins - 1, int((r - lo) / bin_width))] += 1
    return {
        "edges": edges,
        "counts": counts,
        "frac_good": float(np.mean(rewards >= 0.4)),
        "frac_zero": float(np.mean(np.abs(rewards) < 1e-9)),
    }


def save_transition_store(path, ds: RelabeledDataset):
    """Binary transition store (.npz) plus a text manifest next to it."""
    path = os.fspath(path)
    np.savez(
        path,
        states=np.stack([tr.state for tr in ds.transitions]),
        actions=np.array([tr.action for tr in ds.transitions]),
        rewards=np.array([tr.reward for tr in ds.transitions]),
        next_states=np.stack([tr.next_state for tr in ds.transitions]),
        dones=np.array([tr.done for tr in ds.transitions]),
    )
    hist = reward_histogram(ds)
    manifest = {
        "n_transitions": len(ds),
        "episodes": [{"id": eid, "transitions": n} for eid, n in ds.provenance],
        "clipped_actions": ds.clipped_actions,
        "reward_histogram": {
            "edges": [float(e) for e in hist["edges"]],
            "counts": [int(c) for c in hist["counts"]],
            "frac_good": hist["frac_good"],
            "frac_zero": hist["frac_zero"],
        },
    }
    base = path[:-4] if path.endswith(".npz") else path
    with open(base + ".manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)


def load_transition_store(path):
    path = os.fspath(path)
    if not os.path.exists(path) and os.path.exists(path + ".npz"):
        path = path + ".npz"
    with np.load(path) as data:
        transitions = [
            Transition(data["states"][i], float(data["actions"][i]),
                       float(data["rewards"][i]), data["next_states"][i],
                       bool(data["dones"][i]))
            for i in range(len(data["actions"]))
        ]
    provenance, clipped = [], 0
    base = path[:-4] if path.endswith(".npz") else path
    manifest_path = base + ".manifest.json"
    if os.path.exists(manifest_path):
        with open(manifest_path) as fh:
            manifest = json.load(fh)
        provenance = [(e["id"], e["transitions"]) for e in manifest["episodes"]]
        clipped = manifest["clipped_actions"]
    return RelabeledDataset(transitions, provenance, clipped)


def ingest(pattern, cfg: SimConfig, rcfg: RewardConfig, dt=0.1):
    """Parse every file matching the glob and relabel per episode."""
    paths = sorted(glob.glob(pattern)) if any(ch in pattern for ch in "*?[") \
        else [pattern]
    if not paths:
        raise ValueError(f"no files match {pattern!r}")
    episodes = [parse_trajectory_csv(p, dt=dt) for p in paths]
    return [build_transitions(ep, cfg, rcfg) for ep in episodes]


def rollout_episode(controller, profile, cfg: SimConfig, rcfg: RewardConfig,
                    initial_gap, follower_speed=0.0, episode_id="synthetic"):
    """Roll a controller with an act(v, a, v_l, g) interface through the
    simulator and record the trajectory rows the relabeler expects."""
    from .simcore import FollowEnv

    env = FollowEnv(cfg, rcfg)
    env.reset(profile, initial_gap=initial_gap, follower_speed=follower_speed)
    records = [TrajectoryRecord(0.0, env.leader.speed, env.follower.speed, env.gap)]
    rewards = []
    done = False
    while not done:
        action = controller.act(env.follower.speed, env.follower.accel,
                                env.leader.speed, env.gap)
        _, reward, done, info = env.step(action)
        if info.collision:
            break   # a gap <= 0 row would not be a valid trajectory record
        records.append(TrajectoryRecord(info.t, info.v_l, info.v, info.gap))
        rewards.append(reward)
    return FollowingEpisode(episode_id, records, "synthetic"), rewards


def make_synthetic(n_episodes, seed, cfg: SimConfig, rcfg: RewardConfig,
                   controller=None, leader_ou=None, duration=None):
    """Fabricate a stand-in human dataset by rolling out IDM (or any
    act-style controller) behind OU leaders.  ``duration`` (seconds)
    optionally shortens the episode horizon."""
    import dataclasses

    from .baselines import IdmController
    from .config import LEADER_OU
    from .simcore import gen_leader_profile

    if duration is not None:
        cfg = dataclasses.replace(cfg, max_steps=int(round(duration / cfg.dt)))
    controller = controller or IdmController()
    leader_ou = leader_ou or LEADER_OU
    rng = np.random.default_rng(seed)
    episodes = []
    for k in range(n_episodes):
        profile = gen_leader_profile(int(rng.integers(0, 2 ** 31 - 1)),
                                     (cfg.max_steps + 1) * cfg.dt, cfg, leader_ou)
        gap0 = float(rng.uniform(max(cfg.init_gap_low, 5.0), cfg.init_gap_high))
        ep, _ = rollout_episode(controller, profile, cfg, rcfg, gap0,
                                episode_id=f"synthetic-{k:03d}")
        episodes.append(ep)
    return episodes

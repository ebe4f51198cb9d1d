"""DDPG with dual replay buffers and the five training regimes.

Stage 1 learns purely from simulator interaction; stage 2 resumes
training with minibatches mixed at ratio r from a practical buffer of
relabeled human transitions and the live simulation buffer.  A fully
off-policy mode (no interaction at all) demonstrates extrapolation error.
"""

import os
from dataclasses import dataclass

import numpy as np

from .config import LEADER_OU, DdpgConfig, OuParams, RewardConfig, SimConfig
from .nets import AdamState, MlpNet, opt_step, soft_update
from .simcore import FollowEnv, OuNoise, gen_leader_profile, normalize_state


@dataclass
class Transition:
    state: np.ndarray
    action: float       # m/s^2, raw
    reward: float
    next_state: np.ndarray
    done: bool


class ReplayBuffer:
    """Fixed-capacity ring buffer with FIFO eviction."""

    def __init__(self, capacity):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.storage = []
        self.cursor = 0

    def __len__(self):
        return len(self.storage)

    def add(self, tr: Transition):
        if len(self.storage) < self.capacity:
            self.storage.append(tr)
        else:
            self.storage[self.cursor] = tr
        self.cursor = (self.cursor + 1) % self.capacity

    def extend(self, transitions):
        for tr in transitions:
            self.add(tr)

    def sample(self, rng, n):
        if not self.storage:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, len(self.storage), size=n)
        return [self.storage[i] for i in idx]


def mix_count(r, batch_size):
    """Practical-buffer share of a batch: round-half-up of r*B."""
    return int(np.floor(r * batch_size + 0.5))


def sample_mixed(sim_buf, practical_buf, batch_size, r, rng):
    """Exactly round(r*B) transitions from the practical buffer and the
    remainder from the simulation buffer, shuffled together."""
    if not (0.0 <= r <= 1.0):
        raise ValueError("ratio r must lie in [0, 1]")
    n_prac = mix_count(r, batch_size)
    n_sim = batch_size - n_prac
    batch = []
    if n_prac:
        batch += practical_buf.sample(rng, n_prac)
    if n_sim:
        batch += sim_buf.sample(rng, n_sim)
    order = rng.permutation(len(batch))
    return [batch[i] for i in order]


class DdpgAgent:
    """Actor-critic pair with target networks and OU exploration noise."""

    def __init__(self, cfg: DdpgConfig = None, sim_cfg: SimConfig = None, seed=0):
        self.cfg = cfg or DdpgConfig()
        self.sim_cfg = sim_cfg or SimConfig()
        hidden = list(self.cfg.hidden)
        ss = np.random.SeedSequence(seed)
        actor_seed, critic_seed, agent_seed, head_seed = ss.spawn(4)
        self.actor = MlpNet([4] + hidden + [1], "tanh", seed=actor_seed)
        self.critic = MlpNet([5] + hidden + [1], "linear", seed=critic_seed)
        # near-zero output heads keep the tanh actor out of saturation and
        # the initial Q surface flat, so early critic noise cannot pin the
        # policy at an action bound it never escapes
        head_rng = np.random.default_rng(head_seed)
        for net in (self.actor, self.critic):
            net.weights[-1] = head_rng.uniform(-3e-3, 3e-3,
                                               net.weights[-1].shape)
            net.biases[-1] = head_rng.uniform(-3e-3, 3e-3,
                                              net.biases[-1].shape)
        self.actor_target = self.actor.copy()
        self.critic_target = self.critic.copy()
        self.actor_opt = AdamState(self.actor, lr=self.cfg.lr)
        self.critic_opt = AdamState(self.critic, lr=self.cfg.lr)
        self.noise = OuNoise(self.cfg.noise, self.sim_cfg.dt)
        self.rng = np.random.default_rng(agent_seed)
        self.buffer = ReplayBuffer(self.cfg.buffer_size)

    # -- action scaling ----------------------------------------------------
    def scale_action(self, u):
        c = self.sim_cfg
        return c.a_min + (u + 1.0) / 2.0 * (c.a_max - c.a_min)

    def unscale_action(self, a):
        c = self.sim_cfg
        return 2.0 * (a - c.a_min) / (c.a_max - c.a_min) - 1.0

    def select_action(self, obs, explore=False):
        """Greedy actor output mapped to [a_min, a_max]; with explore=True
        adds OU noise scaled to half the action range, then clips."""
        c = self.sim_cfg
        u = float(self.actor.forward(obs)[0])
        a = self.scale_action(u)
        if explore:
            a += self.noise.sample(self.rng) * (c.a_max - c.a_min) / 2.0
        return min(max(a, c.a_min), c.a_max)

    def act(self, v, a, v_l, g):
        """Controller interface used by the evaluation harness."""
        return self.select_action(normalize_state(v, a, v_l, g, self.sim_cfg))

    # -- learning ----------------------------------------------------------
    def train_step(self, batch):
        """One critic regression + actor ascent + target soft update."""
        if not batch:
            raise ValueError("train_step needs a non-empty batch")
        n = len(batch)
        s = np.stack([tr.state for tr in batch])
        a = np.array([[self.unscale_action(tr.action)] for tr in batch])
        r = np.array([[tr.reward] for tr in batch])
        s2 = np.stack([tr.next_state for tr in batch])
        live = np.array([[0.0 if tr.done else 1.0] for tr in batch])

        a2 = self.actor_target.forward(s2)
        q2 = self.critic_target.forward(np.hstack([s2, a2]))
        y = r + self.cfg.gamma * live * q2

        q, cache = self.critic.forward(np.hstack([s, a]), cache=True)
        diff = q - y
        critic_loss = float(np.mean(diff ** 2))
        grads = self.critic.backward(cache, 2.0 * diff / n)
        opt_step(self.critic, grads, self.critic_opt)

        u, acache = self.actor.forward(s, cache=True)
        qa, ccache = self.critic.forward(np.hstack([s, u]), cache=True)
        dq = self.critic.backward(ccache, np.full((n, 1), 1.0 / n))
        da = dq["input"][:, 4:]
        agrads = self.actor.backward(acache, da)
        ascent = {
            "weights": [-g for g in agrads["weights"]],
            "biases": [-g for g in agrads["biases"]],
        }
        opt_step(self.actor, ascent, self.actor_opt)

        soft_update(self.actor_target, self.actor, self.cfg.tau)
        soft_update(self.critic_target, self.critic, self.cfg.tau)
        return {"critic_loss": critic_loss, "actor_q": float(np.mean(qa))}

    # -- persistence ---------------------------------------------------------
    def save(self, out_dir):
        os.makedirs(out_dir, exist_ok=True)
        self.actor.save(os.path.join(out_dir, "actor.bin"))
        self.critic.save(os.path.join(out_dir, "critic.bin"))
        self.actor_target.save(os.path.join(out_dir, "actor_target.bin"))
        self.critic_target.save(os.path.join(out_dir, "critic_target.bin"))

    def load(self, out_dir):
        self.actor = MlpNet.load(os.path.join(out_dir, "actor.bin"))
        self.critic = MlpNet.load(os.path.join(out_dir, "critic.bin"))
        self.actor_target = MlpNet.load(os.path.join(out_dir, "actor_target.bin"))
        self.critic_target = MlpNet.load(os.path.join(out_dir, "critic_target.bin"))


@dataclass
class EpisodeStats:
    episode: int
    steps: int
    mean_reward: float
    collisions: int


def _episode_profile(rng, sim_cfg, leader_ou):
    seed = int(rng.integers(0, 2 ** 31 - 1))
    duration = (sim_cfg.max_steps + 1) * sim_cfg.dt
    return gen_leader_profile(seed, duration, sim_cfg, leader_ou), seed


def run_training_episode(agent, env, rng, sim_cfg, leader_ou, budget_left,
                         sample_fn, explore=True):
    """One episode of Algorithm-1 style interaction: act, store, then one
    gradient step per environment step once enough data is banked."""
    profile, _ = _episode_profile(rng, sim_cfg, leader_ou)
    obs = env.reset(profile, seed=int(rng.integers(0, 2 ** 31 - 1)))
    agent.noise.reset()
    total, steps, collisions = 0.0, 0, 0
    while steps < budget_left:
        action = agent.select_action(obs, explore=explore)
        next_obs, reward, done, info = env.step(action)
        # horizon exhaustion is not a real terminal state: bootstrap through
        # it so late-episode values are not dragged toward zero
        timeout = done and not info.collision and info.gap <= sim_cfg.g_max
        agent.buffer.add(Transition(obs, action, reward, next_obs,
                                    done and not timeout))
        batch = sample_fn()
        if batch is not None:
            agent.train_step(batch)
        obs = next_obs
        total += reward
        steps += 1
        if info.collision:
            collisions += 1
        if done:
            break
    return total, steps, collisions


def train_stage1(agent: DdpgAgent, budget=None, seed=0, rcfg=None,
                 leader_ou: OuParams = LEADER_OU, progress=None):
    """Pure-simulator DDPG: fresh OU leader and random initial gap each
    episode, one update per step once the buffer holds a full batch.

    Returns the per-episode reward history.
    """
    cfg, sim_cfg = agent.cfg, agent.sim_cfg
    budget = cfg.stage1_budget if budget is None else budget
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    env = FollowEnv(sim_cfg, rcfg or RewardConfig())

    def sample_fn():
        if len(agent.buffer) >= cfg.batch_size:
            return agent.buffer.sample(rng, cfg.batch_size)
        return None

    history = []
    used = 0
    while used < budget:
        total, steps, collisions = run_training_episode(
            agent, env, rng, sim_cfg, leader_ou, budget - used, sample_fn)
        used += steps
        history.append(EpisodeStats(len(history), steps, total / steps, collisions))
        if progress:
            progress(history[-1])
    return history


def train_stage2(agent: DdpgAgent, practical_buf: ReplayBuffer, ratio,
                 budget=None, seed=0, rcfg=None, leader_ou: OuParams = LEADER_OU,
                 explore=None, progress=None):
    """Resume training with mixed batches: round(r*B) practical transitions
    per batch, the rest fresh simulator experience.  r = 1.0 reproduces the
    offline-degradation regime (interaction continues but contributes no
    gradients)."""
    if len(practical_buf) == 0 and ratio > 0:
        raise ValueError("practical buffer is empty")
    cfg, sim_cfg = agent.cfg, agent.sim_cfg
    budget = cfg.stage2_budget if budget is None else budget
    explore = cfg.stage2_explore if explore is None else explore
    rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
    env = FollowEnv(sim_cfg, rcfg or RewardConfig())

    def sample_fn():
        if len(agent.buffer) >= cfg.batch_size:
            return sample_mixed(agent.buffer, practical_buf, cfg.batch_size,
                                ratio, rng)
        return None

    history = []
    used = 0
    while used < budget:
        total, steps, collisions = run_training_episode(
            agent, env, rng, sim_cfg, leader_ou, budget - used, sample_fn,
            explore=explore)
        used += steps
        history.append(EpisodeStats(len(history), steps, total / steps, collisions))
        if progress:
            progress(history[-1])
    return history


def train_fully_offpolicy(agent: DdpgAgent, practical_buf: ReplayBuffer,
                          budget=None, seed=0, rcfg=None,
                          leader_ou: OuParams = LEADER_OU,
                          eval_every=2000, eval_episodes=1, progress=None):
    """Gradient steps exclusively on the practical buffer, never touching
    the simulator for data; periodic greedy episodes record the curve."""
    if len(practical_buf) == 0:
        raise ValueError("practical buffer is empty")
    cfg = agent.cfg
    budget = cfg.stage1_budget if budget is None else budget
    rng = np.random.default_rng(np.random.SeedSequence([seed, 3]))
    eval_rng = np.random.default_rng(np.random.SeedSequence([seed, 4]))
    curve = []
    for step in range(budget):
        batch = practical_buf.sample(rng, cfg.batch_size)
        agent.train_step(batch)
        if (step + 1) % eval_every == 0 or step + 1 == budget:
            eval_seed = int(eval_rng.integers(0, 2 ** 31 - 1))
            stats = greedy_eval(agent, n_episodes=eval_episodes, seed=eval_seed,
                                rcfg=rcfg, leader_ou=leader_ou)
            curve.append(EpisodeStats(len(curve), step + 1,
                                      stats["mean_reward"], stats["collisions"]))
            if progress:
                progress(curve[-1])
    return curve


def greedy_eval(agent: DdpgAgent, n_episodes=20, seed=0, rcfg=None,
                leader_ou: OuParams = LEADER_OU):
    """Exploration-free rollouts on fresh OU leaders; reports the mean
    per-step reward and total collisions."""
    sim_cfg = agent.sim_cfg
    rng = np.random.default_rng(np.random.SeedSequence([seed, 5]))
    env = FollowEnv(sim_cfg, rcfg or RewardConfig())
    totals, steps_all, collisions = [], 0, 0
    for _ in range(n_episodes):
        profile, _ = _episode_profile(rng, sim_cfg, leader_ou)
        obs = env.reset(profile, seed=int(rng.integers(0, 2 ** 31 - 1)))
        done = False
        while not done:
            obs, reward, done, info = env.step(agent.select_action(obs))
            totals.append(reward)
            steps_all += 1
            if info.collision:
                collisions += 1
    return {"mean_reward": float(np.mean(totals)), "steps": steps_all,
            "collisions": collisions}

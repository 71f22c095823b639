"""Soft actor-critic over trajectory-pair observations.

Per episode: a scripted warm-up fills the history FIFO, the stochastic
policy collects transitions of (short view, long view, action, reward, next
views, done), then a block of gradient steps updates the twin critics
(clipped double-Q targets from delayed target networks), the actor
(reparameterized entropy-regularized objective), and the temperature
(log-space), followed by Polyak target blending.

Every random draw derives from (seed, purpose, episode), so a run is
bit-reproducible and resumable from saved state.
"""

from __future__ import annotations

import copy
import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import autodiff as ad
from .autodiff import Tape, Tensor, backward, parameter
from .checkpoint import save_checkpoint
from .config import RunConfig, run_config_to_dict
from .critic import CriticNetwork
from .dynamics import NEUTRAL_WARMUP_COMMAND, ControlCommand
from .environment import DogfightEnv
from .errors import ContractError, SimulationFault
from .evaluation import (WIN_STATES, derive_seed, play_episode,
                         trajectory_config)
from .networks import polyak_blend, set_requires_grad
from .observations import HistoryBuffer, build_state
from .optim import Adam
from .policy import ActorBase, _squashed_log_prob, build_actor
from .replay import Batch, ReplayBuffer, TransitionRecord
from .toy_task import HeadingHoldConfig, HeadingHoldEnv


@dataclass
class EpisodeStats:
    steps_collected: int
    env_steps: int
    reward_sum: float
    termination: str | None
    ended_in_warmup: bool

    @property
    def mean_reward(self) -> float:
        return self.reward_sum / max(1, self.steps_collected)


def rollout_episode(env, actor: ActorBase, history: HistoryBuffer,
                    replay: ReplayBuffer, rng: np.random.Generator,
                    episode_seed: int) -> EpisodeStats:
    """One episode of experience collection (Alg-style warm-up included).

    Transitions are staged locally and flushed to the replay buffer only on
    clean completion, so a faulted episode leaves no partial records.
    """
    max_steps = getattr(env.config, "max_steps")
    warmup = history.config.capacity
    if max_steps <= warmup:
        raise ContractError(f"max_steps {max_steps} must exceed warm-up "
                            f"{warmup}")
    env.reset(episode_seed)
    history.clear()
    a_init = NEUTRAL_WARMUP_COMMAND
    staged: list[TransitionRecord] = []

    for _ in range(warmup):
        result = env.step(a_init)
        history.push(build_state(result.own, result.oppo, a_init,
                                 result.geometry))
        if result.termination is not None:
            return EpisodeStats(0, env.step_index, 0.0,
                                result.termination.value, True)

    reward_sum = 0.0
    s_s, s_l = history.short_view(), history.long_view()
    while True:
        action = actor.act_stochastic(s_l, s_s, rng)
        cmd = ControlCommand.from_array(action)
        result = env.step(cmd)
        history.push(build_state(result.own, result.oppo, cmd,
                                 result.geometry))
        next_s_s, next_s_l = history.short_view(), history.long_view()
        done = (1.0 if result.termination is not None
                and result.termination.is_terminal_state() else 0.0)
        staged.append(TransitionRecord(s_s, s_l, action, result.reward_total,
                                       next_s_s, next_s_l, done))
        reward_sum += result.reward_total
        s_s, s_l = next_s_s, next_s_l
        if result.termination is not None:
            break
    for rec in staged:
        replay.add(rec)
    return EpisodeStats(len(staged), env.step_index, reward_sum,
                        result.termination.value, False)


# ---------------------------------------------------------------------------
# updates
# ---------------------------------------------------------------------------

def compute_critic_targets(batch: Batch, actor: ActorBase,
                           target1: CriticNetwork, target2: CriticNetwork,
                           alpha: float, gamma: float,
                           rng: np.random.Generator) -> np.ndarray:
    """y = r + gamma (1 - done) (min_j Qbar_j(s', a') - alpha log pi(a'|s'))
    with a' freshly sampled from the current policy; no gradients flow."""
    mu, log_std = actor.forward(Tensor(batch.next_s_l), Tensor(batch.next_s_s))
    sigma = np.exp(log_std.data)
    xi = rng.standard_normal(mu.shape)
    u = mu.data + sigma * xi
    next_action = np.tanh(u)
    log_prob = _squashed_log_prob(u, mu.data, sigma)
    q1 = target1.q_numpy(batch.next_s_l, batch.next_s_s, next_action)[:, 0]
    q2 = target2.q_numpy(batch.next_s_l, batch.next_s_s, next_action)[:, 0]
    soft_value = np.minimum(q1, q2) - alpha * log_prob
    return batch.reward + gamma * (1.0 - batch.done) * soft_value


def critic_update(batch: Batch, actor: ActorBase, critics, targets,
                  optimizers, alpha: float, gamma: float,
                  rng: np.random.Generator) -> tuple[float, float]:
    """One squared-error step per critic toward the shared targets."""
    if len(batch) == 0:
        raise ContractError("critic_update: empty batch")
    y = compute_critic_targets(batch, actor, targets[0], targets[1], alpha,
                               gamma, rng)
    y_col = Tensor(y[:, None])
    losses = []
    for critic, opt in zip(critics, optimizers):
        with Tape():
            q = critic.q_value(Tensor(batch.s_l), Tensor(batch.s_s),
                               Tensor(batch.action))
            err = ad.sub(q, y_col)
            loss = ad.tensor_mean(ad.mul(err, err))
            backward(loss)
        opt.step()
        opt.zero_grad()
        losses.append(float(loss.data))
    return losses[0], losses[1]


def actor_update(batch: Batch, actor: ActorBase, critics, optimizer: Adam,
                 alpha: float, rng: np.random.Generator) -> tuple[float, float]:
    """Entropy-regularized policy step; critics stay frozen.

    Returns (loss, mean log-probability of the fresh samples).  Critic
    parameters are masked from the tape so gradients flow through the
    critics' values into the sampled action only.
    """
    noise = rng.standard_normal((len(batch), 4))
    set_requires_grad(critics[0].params, False)
    set_requires_grad(critics[1].params, False)
    try:
        with Tape():
            action, log_prob = actor.sample_graph(Tensor(batch.s_l),
                                                  Tensor(batch.s_s), noise)
            q1 = critics[0].q_value(Tensor(batch.s_l), Tensor(batch.s_s),
                                    action)
            q2 = critics[1].q_value(Tensor(batch.s_l), Tensor(batch.s_s),
                                    action)
            q_min = ad.minimum(q1, q2)
            loss = ad.tensor_mean(ad.sub(ad.mul(log_prob, alpha), q_min))
            backward(loss)
    finally:
        set_requires_grad(critics[0].params, True)
        set_requires_grad(critics[1].params, True)
    optimizer.step()
    optimizer.zero_grad()
    return float(loss.data), float(log_prob.data.mean())


def temperature_update(mean_log_prob: float, log_alpha: Tensor,
                       optimizer: Adam, target_entropy: float) -> float:
    """Gradient step on log(alpha); stationary when the policy entropy
    matches the target."""
    log_alpha.grad = np.array(-(mean_log_prob + target_entropy))
    optimizer.step()
    optimizer.zero_grad()
    return float(math.exp(float(log_alpha.data)))


def polyak_update(targets, critics, tau: float) -> None:
    for target, critic in zip(targets, critics):
        polyak_blend(target.params, critic.params, tau)


# ---------------------------------------------------------------------------
# training loop
# ---------------------------------------------------------------------------

METRIC_COLUMNS = ("episode", "env_steps", "eval_damage_ratio",
                  "eval_win_rate", "mean_reward", "alpha", "q1_loss",
                  "q2_loss", "pi_loss")


@dataclass
class TrainResult:
    out_dir: Path
    metrics_path: Path
    final_checkpoint: Path
    resume_path: Path
    episodes_run: int
    env_steps: int
    eval_history: list = field(default_factory=list)
    faults: int = 0


class Trainer:
    def __init__(self, cfg: RunConfig, out_dir: str | Path | None = None):
        self.cfg = cfg
        self.out_dir = Path(out_dir if out_dir is not None else cfg.run.out_dir)
        seed = cfg.run.seed
        self.actor = build_actor(cfg.network,
                                 np.random.default_rng(derive_seed(seed, 1)))
        self.critics = (CriticNetwork(cfg.network,
                                      np.random.default_rng(derive_seed(seed, 2))),
                        CriticNetwork(cfg.network,
                                      np.random.default_rng(derive_seed(seed, 3))))
        self.targets = (copy.deepcopy(self.critics[0]),
                        copy.deepcopy(self.critics[1]))
        self.log_alpha = parameter(np.array(math.log(cfg.trainer.init_alpha)),
                                   "log_alpha")
        t = cfg.trainer
        self.opt_q = (Adam(self.critics[0].params, t.lr_q),
                      Adam(self.critics[1].params, t.lr_q))
        self.opt_pi = Adam(self.actor.params, t.lr_pi)
        self.opt_alpha = Adam({"log_alpha": self.log_alpha}, t.lr_alpha)
        traj = trajectory_config(cfg.network)
        self.history = HistoryBuffer(traj)
        self.replay = ReplayBuffer(t.replay_capacity,
                                   (traj.short_len, 33), (traj.long_len, 33))
        self.episode = 0
        self.env_steps = 0
        self.faults = 0
        self._build_envs()

    def _build_envs(self):
        cfg = self.cfg
        if cfg.run.task == "heading_hold":
            toy = HeadingHoldConfig(max_steps=cfg.environment.max_steps,
                                    step_rate_hz=cfg.environment.step_rate_hz)
            self.env = HeadingHoldEnv(toy)
            self.eval_env = HeadingHoldEnv(toy)
            return
        own_af, oppo_af = cfg.environment.build_airframes()
        reward_cfg = cfg.reward.build()
        self.env = DogfightEnv(cfg.environment.episode_config("training", 0),
                               own_af, oppo_af, reward_cfg)
        self.eval_env = DogfightEnv(
            cfg.environment.episode_config("evaluation", 0), own_af, oppo_af,
            reward_cfg)

    @property
    def alpha(self) -> float:
        return float(math.exp(float(self.log_alpha.data)))

    # -- persistence ---------------------------------------------------------

    def _resume_arrays(self) -> dict[str, np.ndarray]:
        arrays: dict[str, np.ndarray] = {}
        for prefix, net in (("actor", self.actor), ("q1", self.critics[0]),
                            ("q2", self.critics[1]),
                            ("t1", self.targets[0]), ("t2", self.targets[1])):
            for k, v in net.params.items():
                arrays[f"{prefix}/{k}"] = v.data
        arrays.update(self.opt_q[0].state_arrays("opt_q1"))
        arrays.update(self.opt_q[1].state_arrays("opt_q2"))
        arrays.update(self.opt_pi.state_arrays("opt_pi"))
        arrays.update(self.opt_alpha.state_arrays("opt_alpha"))
        arrays["log_alpha"] = self.log_alpha.data
        arrays.update(self.replay.state_arrays())
        arrays["counters"] = np.array([float(self.episode),
                                       float(self.env_steps),
                                       float(self.faults)])
        return arrays

    def save_resume_state(self, path: str | Path) -> None:
        path = Path(path)
        tmp = path.with_suffix(".tmp.npz")
        np.savez(tmp, **self._resume_arrays())
        tmp.replace(path)

    def load_resume_state(self, path: str | Path) -> None:
        with np.load(path) as data:
            arrays = {k: np.array(data[k]) for k in data.files}
        for prefix, net in (("actor", self.actor), ("q1", self.critics[0]),
                            ("q2", self.critics[1]),
                            ("t1", self.targets[0]), ("t2", self.targets[1])):
            for k, v in net.params.items():
                v.data = np.array(arrays[f"{prefix}/{k}"], dtype=np.float64)
        self.opt_q[0].load_state_arrays("opt_q1", arrays)
        self.opt_q[1].load_state_arrays("opt_q2", arrays)
        self.opt_pi.load_state_arrays("opt_pi", arrays)
        self.opt_alpha.load_state_arrays("opt_alpha", arrays)
        self.log_alpha.data = np.array(arrays["log_alpha"], dtype=np.float64)
        self.replay.load_state_arrays(arrays)
        counters = arrays["counters"]
        self.episode = int(counters[0])
        self.env_steps = int(counters[1])
        self.faults = int(counters[2])

    def save_checkpoints(self, tag: str) -> Path:
        actor_path = self.out_dir / f"actor_{tag}.tfz"
        save_checkpoint(actor_path, self.actor.state_arrays())
        save_checkpoint(self.out_dir / f"critic1_{tag}.tfz",
                        self.critics[0].state_arrays())
        save_checkpoint(self.out_dir / f"critic2_{tag}.tfz",
                        self.critics[1].state_arrays())
        save_checkpoint(self.out_dir / f"target1_{tag}.tfz",
                        self.targets[0].state_arrays())
        save_checkpoint(self.out_dir / f"target2_{tag}.tfz",
                        self.targets[1].state_arrays())
        return actor_path

    # -- evaluation ------------------------------------------------------------

    def evaluation_pass(self, episode: int) -> tuple[float, float]:
        """Mean opponent-life fraction removed and win rate, deterministic
        actions, fresh evaluation spawns."""
        traj = trajectory_config(self.cfg.network)
        damages, wins = [], []
        for i in range(self.cfg.run.eval_episodes):
            seed = derive_seed(self.cfg.run.seed, 13, episode, i)
            outcome = play_episode(self.eval_env, self.actor, traj, seed)
            damages.append((20 - outcome.oppo_life) / 20.0)
            wins.append(outcome.termination in WIN_STATES)
        return float(np.mean(damages)), float(np.mean(wins))

    # -- main loop -------------------------------------------------------------

    def train(self, quiet: bool = True) -> TrainResult:
        cfg = self.cfg
        self.out_dir.mkdir(parents=True, exist_ok=True)
        config_path = self.out_dir / "config.json"
        config_path.write_text(json.dumps(run_config_to_dict(cfg), indent=2,
                                          default=str) + "\n")
        metrics_path = self.out_dir / "metrics.csv"
        fresh_metrics = self.episode == 0 or not metrics_path.exists()
        metrics_file = open(metrics_path, "w" if fresh_metrics else "a",
                            newline="")
        writer = csv.writer(metrics_file)
        if fresh_metrics:
            writer.writerow(METRIC_COLUMNS)

        eval_history = []
        trainer_cfg = cfg.trainer
        try:
            while self.episode < cfg.run.episodes:
                episode = self.episode + 1
                ep_seed = derive_seed(cfg.run.seed, 10, episode)
                act_rng = np.random.default_rng(derive_seed(cfg.run.seed, 11,
                                                            episode))
                upd_rng = np.random.default_rng(derive_seed(cfg.run.seed, 12,
                                                            episode))
                try:
                    stats = rollout_episode(self.env, self.actor, self.history,
                                            self.replay, act_rng, ep_seed)
                except SimulationFault as fault:
                    self.faults += 1
                    self.episode = episode
                    if not quiet:
                        print(f"episode {episode}: discarded ({fault})")
                    continue
                self.episode = episode
                self.env_steps += stats.env_steps

                updates = (trainer_cfg.updates_per_episode
                           if trainer_cfg.updates_per_episode is not None
                           else stats.steps_collected
                           // trainer_cfg.update_interval_steps)
                q1_losses, q2_losses, pi_losses = [], [], []
                for _ in range(updates):
                    if len(self.replay) < trainer_cfg.batch_size:
                        break
                    batch = self.replay.sample(trainer_cfg.batch_size, upd_rng)
                    q1_loss, q2_loss = critic_update(
                        batch, self.actor, self.critics, self.targets,
                        self.opt_q, self.alpha, trainer_cfg.gamma, upd_rng)
                    pi_loss, mean_logp = actor_update(
                        batch, self.actor, self.critics, self.opt_pi,
                        self.alpha, upd_rng)
                    temperature_update(mean_logp, self.log_alpha,
                                       self.opt_alpha,
                                       trainer_cfg.target_entropy)
                    polyak_update(self.targets, self.critics, trainer_cfg.tau)
                    q1_losses.append(q1_loss)
                    q2_losses.append(q2_loss)
                    pi_losses.append(pi_loss)

                eval_damage = eval_win = None
                if episode % cfg.run.eval_every == 0:
                    if cfg.run.task == "dogfight":
                        eval_damage, eval_win = self.evaluation_pass(episode)
                    eval_history.append((episode, eval_damage, eval_win))

                writer.writerow([
                    episode, self.env_steps,
                    "" if eval_damage is None else f"{eval_damage:.6f}",
                    "" if eval_win is None else f"{eval_win:.6f}",
                    f"{stats.mean_reward:.6f}", f"{self.alpha:.6f}",
                    f"{np.mean(q1_losses):.6f}" if q1_losses else "",
                    f"{np.mean(q2_losses):.6f}" if q2_losses else "",
                    f"{np.mean(pi_losses):.6f}" if pi_losses else "",
                ])
                metrics_file.flush()
                if not quiet:
                    print(f"episode {episode}: steps={stats.steps_collected} "
                          f"mean_r={stats.mean_reward:+.3f} "
                          f"alpha={self.alpha:.3f} "
                          f"term={stats.termination}")

                if episode % cfg.run.checkpoint_every == 0:
                    self.save_checkpoints(f"ep{episode:06d}")
                    self.save_resume_state(self.out_dir / "resume_latest.npz")
        finally:
            metrics_file.close()

        final = self.save_checkpoints("final")
        resume_path = self.out_dir / "resume_latest.npz"
        self.save_resume_state(resume_path)
        return TrainResult(out_dir=self.out_dir, metrics_path=metrics_path,
                           final_checkpoint=final, resume_path=resume_path,
                           episodes_run=self.episode, env_steps=self.env_steps,
                           eval_history=eval_history, faults=self.faults)


def train(cfg: RunConfig, resume_from: str | Path | None = None,
          quiet: bool = True) -> TrainResult:
    trainer = Trainer(cfg)
    if resume_from is not None:
        trainer.load_resume_state(resume_from)
    return trainer.train(quiet=quiet)

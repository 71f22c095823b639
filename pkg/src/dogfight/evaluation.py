"""Deterministic evaluation episodes, aggregate reports, trace export."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .checkpoint import load_checkpoint
from .dynamics import NEUTRAL_WARMUP_COMMAND, ControlCommand
from .environment import (DogfightEnv, EpisodeConfig, Termination,
                          step_trace_record)
from .errors import ContractError
from .observations import HistoryBuffer, TrajectoryConfig, build_state
from .policy import ActorBase, NetworkConfig, build_actor

WIN_STATES = (Termination.OWN_WIN, Termination.CRASH_OPPO)
LOSS_STATES = (Termination.OPPO_WIN, Termination.CRASH_OWN)


def trajectory_config(net: NetworkConfig) -> TrajectoryConfig:
    return TrajectoryConfig(short_len=net.short_len, long_len=net.long_len,
                            stride=net.stride)


@dataclass
class EpisodeOutcome:
    termination: Termination
    steps: int                   # total environment steps, warm-up included
    own_life: int
    oppo_life: int
    reward_sum: float            # post-warm-up shaped reward
    trace: list = field(default_factory=list)


def play_episode(env, actor: ActorBase, traj_cfg: TrajectoryConfig,
                 seed: int, stochastic_rng: np.random.Generator | None = None,
                 record_trace: bool = False) -> EpisodeOutcome:
    """Run one full episode: scripted warm-up, then the policy.

    Deterministic actions unless ``stochastic_rng`` is given.  The warm-up
    executes the neutral command while the history buffer fills; damage and
    termination stay live during it.
    """
    max_steps = getattr(env.config, "max_steps")
    if max_steps <= traj_cfg.capacity:
        raise ContractError(f"max_steps {max_steps} must exceed the "
                            f"{traj_cfg.capacity}-step warm-up")
    env.reset(seed)
    history = HistoryBuffer(traj_cfg)
    dt = env.config.dt
    trace = []
    a_init = NEUTRAL_WARMUP_COMMAND
    reward_sum = 0.0
    result = None

    for _ in range(traj_cfg.capacity):
        result = env.step(a_init)
        history.push(build_state(result.own, result.oppo, a_init,
                                 result.geometry))
        if record_trace and result.breakdown is not None:
            trace.append(step_trace_record(env.step_index, dt, result))
        if result.termination is not None:
            return EpisodeOutcome(result.termination, env.step_index,
                                  result.own.life, result.oppo.life,
                                  reward_sum, trace)

    while True:
        s_s, s_l = history.short_view(), history.long_view()
        if stochastic_rng is None:
            action = actor.act_deterministic(s_l, s_s)
        else:
            action = actor.act_stochastic(s_l, s_s, stochastic_rng)
        cmd = ControlCommand.from_array(action)
        result = env.step(cmd)
        reward_sum += result.reward_total
        history.push(build_state(result.own, result.oppo, cmd,
                                 result.geometry))
        if record_trace and result.breakdown is not None:
            trace.append(step_trace_record(env.step_index, dt, result))
        if result.termination is not None:
            return EpisodeOutcome(result.termination, env.step_index,
                                  result.own.life, result.oppo.life,
                                  reward_sum, trace)


def play_scripted_episode(env: DogfightEnv, pilot_policy: str, seed: int,
                          warmup_steps: int = 0) -> EpisodeOutcome:
    """Episode with the ownship flown by a scripted controller.

    Gives non-learning baselines (e.g. straight-and-level cruise) the exact
    episode contract the learned policy gets: the same neutral warm-up
    period, then the script takes over.
    """
    from .opponents import make_opponent
    env.reset(seed)
    pilot = make_opponent(
        pilot_policy,
        np.random.default_rng(np.random.SeedSequence([seed, 71])),
        env.own_airframe)
    reward_sum = 0.0
    while True:
        if env.step_index < warmup_steps:
            cmd = NEUTRAL_WARMUP_COMMAND
        else:
            own, oppo = env.states
            cmd = pilot.command(own, oppo, env.step_index)
        result = env.step(cmd)
        reward_sum += result.reward_total
        if result.termination is not None:
            return EpisodeOutcome(result.termination, env.step_index,
                                  result.own.life, result.oppo.life,
                                  reward_sum, [])


@dataclass
class EvalReport:
    episodes: int
    win_pct: float
    lose_pct: float
    draw_pct: float
    damage_pct: float            # mean opponent life removed, percent
    life_pct: float              # mean ownship life remaining, percent
    rows: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"episodes": self.episodes, "win_pct": self.win_pct,
                "lose_pct": self.lose_pct, "draw_pct": self.draw_pct,
                "damage_pct": self.damage_pct, "life_pct": self.life_pct}


def aggregate_report(outcomes: list[EpisodeOutcome]) -> EvalReport:
    n = len(outcomes)
    if n == 0:
        raise ContractError("no episodes to aggregate")
    wins = sum(o.termination in WIN_STATES for o in outcomes)
    losses = sum(o.termination in LOSS_STATES for o in outcomes)
    draws = n - wins - losses
    damage = float(np.mean([(20 - o.oppo_life) / 20.0 for o in outcomes]))
    life = float(np.mean([o.own_life / 20.0 for o in outcomes]))
    rows = [{"episode": i, "termination": o.termination.value,
             "steps": o.steps, "own_life": o.own_life,
             "oppo_life": o.oppo_life, "reward_sum": round(o.reward_sum, 6)}
            for i, o in enumerate(outcomes)]
    return EvalReport(episodes=n, win_pct=100.0 * wins / n,
                      lose_pct=100.0 * losses / n, draw_pct=100.0 * draws / n,
                      damage_pct=100.0 * damage, life_pct=100.0 * life,
                      rows=rows)


def derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1, np.uint64)[0])


def _load_actor(checkpoint_path: str | Path,
                net_cfg: NetworkConfig | None) -> ActorBase:
    arrays = load_checkpoint(checkpoint_path)
    if net_cfg is None:
        sibling = Path(checkpoint_path).parent / "config.json"
        if sibling.exists():
            from .config import load_run_config
            net_cfg = load_run_config(sibling).network
        else:
            net_cfg = NetworkConfig()
    actor = build_actor(net_cfg, np.random.default_rng(0))
    actor.load_state_arrays(arrays)
    return actor


def evaluate(checkpoint_path: str | Path, opponent_policy: str,
             episodes: int, seed: int,
             net_cfg: NetworkConfig | None = None,
             env_template: EpisodeConfig | None = None,
             actor: ActorBase | None = None) -> EvalReport:
    """Deterministic-action evaluation of a checkpoint."""
    if episodes < 1:
        raise ContractError("episodes must be >= 1")
    if actor is None:
        actor = _load_actor(checkpoint_path, net_cfg)
    traj_cfg = trajectory_config(actor.cfg)
    template = env_template or EpisodeConfig(mode="evaluation")
    config = EpisodeConfig(
        mode="evaluation", max_steps=template.max_steps,
        step_rate_hz=template.step_rate_hz, opponent_policy=opponent_policy,
        rng_seed=seed, spawn_speed_kt=template.spawn_speed_kt,
        own_altitude_ft=template.own_altitude_ft,
        opponent_altitude_range_ft=template.opponent_altitude_range_ft,
        spawn_range_ft=template.spawn_range_ft,
        eval_separation_ft=template.eval_separation_ft,
        floor_ft=template.floor_ft)
    env = DogfightEnv(config)
    outcomes = [play_episode(env, actor, traj_cfg,
                             derive_seed(seed, 101, i))
                for i in range(episodes)]
    return aggregate_report(outcomes)


def export_trajectories(checkpoint_path: str | Path, opponent_policy: str,
                        episodes: int, out_path: str | Path, seed: int = 0,
                        net_cfg: NetworkConfig | None = None) -> list[Path]:
    """Write one JSON-lines trace per evaluation episode plus a manifest.

    Partial outputs are removed if anything fails mid-export.
    """
    out_dir = Path(out_path)
    out_dir.mkdir(parents=True, exist_ok=True)
    actor = _load_actor(checkpoint_path, net_cfg)
    traj_cfg = trajectory_config(actor.cfg)
    written: list[Path] = []
    try:
        manifest = {"episodes": [], "opponent": opponent_policy, "seed": seed}
        for i in range(episodes):
            episode_seed = derive_seed(seed, 101, i)
            env = DogfightEnv(EpisodeConfig(mode="evaluation",
                                            opponent_policy=opponent_policy,
                                            rng_seed=episode_seed))
            outcome = play_episode(env, actor, traj_cfg, episode_seed,
                                   record_trace=True)
            path = out_dir / f"episode_{i:03d}.jsonl"
            header = {"type": "header", "episode": i, "seed": episode_seed,
                      "opponent": opponent_policy,
                      "dt": env.config.dt,
                      "termination": outcome.termination.value,
                      "steps": outcome.steps}
            lines = [json.dumps(header)]
            lines += [json.dumps(rec) for rec in outcome.trace]
            path.write_text("\n".join(lines) + "\n")
            written.append(path)
            manifest["episodes"].append({
                "file": path.name, "seed": episode_seed,
                "steps": outcome.steps,
                "termination": outcome.termination.value})
        manifest_path = out_dir / "manifest.json"
        manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
        written.append(manifest_path)
        return written
    except Exception:
        for path in written:
            path.unlink(missing_ok=True)
        raise

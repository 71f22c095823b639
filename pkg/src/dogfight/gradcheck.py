"""Central finite-difference verification of every differentiable operation.

The numeric side never touches the tape: probe points are evaluated by plain
forward passes, so the reverse-mode implementation is checked against an
independent oracle.  ``run_all`` powers the ``dogfight gradcheck``
subcommand and the acceptance suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import autodiff as ad
from .autodiff import Tape, Tensor, backward

DEFAULT_STEP = 1e-6
DEFAULT_TOL = 1e-4


def finite_difference(fn: Callable[[], float], tensors: list[Tensor],
                      step: float = DEFAULT_STEP) -> list[np.ndarray]:
    """Central differences of ``fn()`` w.r.t. every entry of ``tensors``.

    ``fn`` must recompute the scalar from the tensors' current ``.data``;
    entries are perturbed in place and restored.
    """
    grads = []
    for t in tensors:
        g = np.zeros_like(t.data)
        flat = t.data.reshape(-1)
        gf = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            fp = fn()
            flat[i] = orig - step
            fm = fn()
            flat[i] = orig
            gf[i] = (fp - fm) / (2.0 * step)
        grads.append(g)
    return grads


def relative_error(analytic: np.ndarray, numeric: np.ndarray,
                   floor: float = 1e-3) -> float:
    """Worst-entry relative error with a magnitude floor for near-zero grads."""
    diff = np.abs(analytic - numeric)
    den = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float((diff / den).max()) if diff.size else 0.0


def check_gradients(build_loss: Callable[[], Tensor], tensors: list[Tensor],
                    tol: float = DEFAULT_TOL, step: float = DEFAULT_STEP) -> float:
    """Compare tape gradients of ``build_loss()`` against central differences.

    Returns the worst relative error; raises AssertionError above ``tol``.
    """
    for t in tensors:
        t.grad = None
    with Tape():
        loss = build_loss()
        backward(loss)
    analytic = [np.array(t.grad if t.grad is not None else np.zeros_like(t.data))
                for t in tensors]
    numeric = finite_difference(lambda: float(build_loss().data), tensors, step=step)
    worst = max(relative_error(a, n) for a, n in zip(analytic, numeric))
    if worst > tol:
        raise AssertionError(f"gradient check failed: max rel err {worst:.3e} > {tol:g}")
    return worst


@dataclass
class CheckResult:
    name: str
    passed: bool
    max_rel_err: float
    detail: str = ""


def _check(name: str, build_loss, tensors, tol) -> CheckResult:
    try:
        err = check_gradients(build_loss, tensors, tol=tol)
        return CheckResult(name, True, err)
    except AssertionError as exc:
        return CheckResult(name, False, float("nan"), str(exc))


# ---------------------------------------------------------------------------
# operation-level checks
# ---------------------------------------------------------------------------

def _weight_vec(rng, shape):
    return Tensor(rng.standard_normal(shape), requires_grad=True)


def check_matmul(rng: np.random.Generator) -> CheckResult:
    a = _weight_vec(rng, (5, 7))
    b = _weight_vec(rng, (7, 3))
    probe = rng.standard_normal((5, 3))

    def loss():
        return ad.tensor_sum(ad.mul(ad.matmul(a, b), probe))
    return _check("matmul 5x7 @ 7x3", loss, [a, b], tol=1e-6)


def check_batched_matmul(rng: np.random.Generator) -> CheckResult:
    a = _weight_vec(rng, (2, 3, 4, 5))
    b = _weight_vec(rng, (5, 6))
    probe = rng.standard_normal((2, 3, 4, 6))

    def loss():
        return ad.tensor_sum(ad.mul(ad.matmul(a, b), probe))
    return _check("matmul batched (2,3,4,5) @ (5,6)", loss, [a, b], tol=1e-6)


def check_layer_norm(rng: np.random.Generator) -> CheckResult:
    x = _weight_vec(rng, (4, 8))
    gain = Tensor(rng.uniform(0.5, 1.5, 8), requires_grad=True)
    bias = Tensor(rng.standard_normal(8) * 0.1, requires_grad=True)
    probe = rng.standard_normal((4, 8))

    def loss():
        return ad.tensor_sum(ad.mul(ad.layer_norm(x, gain, bias), probe))
    return _check("layer_norm 4x8", loss, [x, gain, bias], tol=DEFAULT_TOL)


def check_softmax(rng: np.random.Generator) -> CheckResult:
    x = _weight_vec(rng, (3, 6))
    probe = rng.standard_normal((3, 6))

    def loss():
        return ad.tensor_sum(ad.mul(ad.softmax(x), probe))
    return _check("softmax 3x6", loss, [x], tol=1e-6)


def _activation_check(name, fn, rng) -> CheckResult:
    x = _weight_vec(rng, (4, 5))
    probe = rng.standard_normal((4, 5))

    def loss():
        return ad.tensor_sum(ad.mul(fn(x), probe))
    tol = 1e-6 if name == "gelu" else DEFAULT_TOL
    return _check(f"activation {name}", loss, [x], tol=tol)


def check_lstm_scan(rng: np.random.Generator, steps: int = 6, d: int = 4) -> CheckResult:
    wx = Tensor(0.4 * rng.standard_normal((d, 4 * d)), requires_grad=True)
    wh = Tensor(0.4 * rng.standard_normal((d, 4 * d)), requires_grad=True)
    b = Tensor(0.1 * rng.standard_normal(4 * d), requires_grad=True)
    xs = Tensor(rng.standard_normal((2, steps, d)), requires_grad=True)
    probe = rng.standard_normal((2, steps, d))

    def loss():
        return ad.tensor_sum(ad.mul(ad.lstm_scan(xs, wx, wh, b), probe))
    return _check(f"lstm_scan fused {steps}-step", loss, [wx, wh, b, xs],
                  tol=DEFAULT_TOL)


def check_lstm_unrolled(rng: np.random.Generator, steps: int = 8, d: int = 5) -> CheckResult:
    wx = Tensor(0.4 * rng.standard_normal((d, 4 * d)), requires_grad=True)
    wh = Tensor(0.4 * rng.standard_normal((d, 4 * d)), requires_grad=True)
    b = Tensor(0.1 * rng.standard_normal(4 * d), requires_grad=True)
    xs = Tensor(rng.standard_normal((steps, d)), requires_grad=True)
    probe = rng.standard_normal((1, d))

    def loss():
        h = Tensor(np.zeros((1, d)))
        c = Tensor(np.zeros((1, d)))
        for k in range(steps):
            step_in = ad.slice_axis(xs, 0, k, k + 1)
            h, c = ad.lstm_step(step_in, h, c, wx, wh, b)
        return ad.tensor_sum(ad.mul(h, probe))
    return _check(f"lstm {steps}-step unroll", loss, [wx, wh, b, xs], tol=DEFAULT_TOL)


def check_elementwise_suite(rng: np.random.Generator) -> list[CheckResult]:
    results = []
    for name, fn in [("relu", ad.relu), ("gelu", ad.gelu), ("tanh", ad.tanh),
                     ("sigmoid", ad.sigmoid), ("exp", ad.exp),
                     ("softplus", ad.softplus)]:
        results.append(_activation_check(name, fn, rng))
    x = Tensor(rng.uniform(0.2, 3.0, (4, 5)), requires_grad=True)
    probe = rng.standard_normal((4, 5))
    results.append(_check("activation log",
                          lambda: ad.tensor_sum(ad.mul(ad.log(x), probe)),
                          [x], tol=DEFAULT_TOL))
    return results


# ---------------------------------------------------------------------------
# whole-network checks (registered lazily to avoid import cycles)
# ---------------------------------------------------------------------------

def check_actor_network(rng: np.random.Generator) -> CheckResult:
    from .policy import NetworkConfig, build_actor

    cfg = NetworkConfig(embed_dim=12, num_blocks=1, num_heads=2,
                        short_len=3, long_len=3, stride=2)
    actor = build_actor(cfg, rng)
    s_l = rng.uniform(-1, 1, (1, cfg.long_len, 33))
    s_s = rng.uniform(-1, 1, (1, cfg.short_len, 33))
    params = list(actor.parameters().values())

    def loss():
        mu, log_std = actor.forward(Tensor(s_l), Tensor(s_s))
        return ad.tensor_sum(ad.add(mu, ad.mul(log_std, 0.3)))
    return _check("actor network (all parameters)", loss, params, tol=DEFAULT_TOL)


def check_critic_network(rng: np.random.Generator) -> CheckResult:
    from .critic import CriticNetwork
    from .policy import NetworkConfig

    cfg = NetworkConfig(embed_dim=10, num_blocks=1, num_heads=2,
                        short_len=3, long_len=3, stride=2)
    critic = CriticNetwork(cfg, rng)
    s_l = rng.uniform(-1, 1, (1, cfg.long_len, 33))
    s_s = rng.uniform(-1, 1, (1, cfg.short_len, 33))
    a = Tensor(rng.uniform(-1, 1, (1, 4)), requires_grad=True)
    params = list(critic.parameters().values()) + [a]

    def loss():
        return ad.tensor_sum(critic.q_value(Tensor(s_l), Tensor(s_s), a))
    return _check("critic network (parameters + action)", loss, params, tol=DEFAULT_TOL)


def check_log_prob_graph(rng: np.random.Generator) -> CheckResult:
    from .policy import NetworkConfig, build_actor

    cfg = NetworkConfig(embed_dim=10, num_blocks=1, num_heads=2,
                        short_len=3, long_len=3, stride=2)
    actor = build_actor(cfg, rng)
    s_l = rng.uniform(-1, 1, (1, cfg.long_len, 33))
    s_s = rng.uniform(-1, 1, (1, cfg.short_len, 33))
    noise = rng.standard_normal((1, 4))
    params = list(actor.parameters().values())

    def loss():
        _, log_prob = actor.sample_graph(Tensor(s_l), Tensor(s_s), noise)
        return ad.tensor_sum(log_prob)
    return _check("squashed-gaussian log-prob graph", loss, params, tol=DEFAULT_TOL)


def run_all(seed: int = 0) -> list[CheckResult]:
    """Run the full finite-difference suite on randomized small shapes."""
    rng = np.random.default_rng(seed)
    results = [
        check_matmul(rng),
        check_batched_matmul(rng),
        check_layer_norm(rng),
        check_softmax(rng),
        *check_elementwise_suite(rng),
        check_lstm_unrolled(rng),
        check_lstm_scan(rng),
        check_actor_network(rng),
        check_critic_network(rng),
        check_log_prob_graph(rng),
    ]
    return results


def main(seed: int = 0) -> int:
    results = run_all(seed)
    for r in results:
        status = "ok" if r.passed else "FAIL"
        err = f"{r.max_rel_err:.2e}" if np.isfinite(r.max_rel_err) else "-"
        print(f"[{status:4s}] {r.name:45s} max rel err {err}  {r.detail}")
    failures = sum(not r.passed for r in results)
    print(f"{len(results) - failures}/{len(results)} gradient checks passed")
    return 0 if failures == 0 else 2

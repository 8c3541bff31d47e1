"""Particle-swarm gain tuning against a closed-loop tracking cost.

Canonical global-best PSO with constriction-style defaults (w = 0.72,
c1 = c2 = 1.49).  One particle starts from all-ones gains, the historical
starting point for the sliding-mode tuning problem; runs are deterministic
for a fixed seed.  Particle evaluations are independent pure simulations,
so they could run concurrently; the global-best reduction breaks cost ties
toward the lowest particle index, which keeps the result independent of
evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .controllers import PIDGains, SlidingParams
from .metrics import SimulationLog, control_effort, rmse_joint, smoothness_metrics

# Cost assigned to runs that left the finite-state envelope; keeping it
# finite keeps the swarm well-defined when particles destabilize the loop.
DIVERGENCE_PENALTY = 1e9

# Search boxes per controller kind, bracketing the known-good sliding-mode
# operating point with about an order of magnitude of headroom.
DEFAULT_BOUNDS = {
    "mbsmc": (np.array([0.1, 0.1, 0.1]), np.array([500.0, 10.0, 200.0])),
    "nmbsmc": (np.array([0.1, 0.1, 0.1]), np.array([500.0, 10.0, 200.0])),
    "pid": (np.array([0.0, 0.0, 0.0]), np.array([500.0, 100.0, 20.0])),
}


@dataclass(frozen=True)
class SwarmConfig:
    particle_count: int = 30
    iterations: int = 100
    inertia: float = 0.72
    cognitive: float = 1.49
    social: float = 1.49
    bounds_lo: np.ndarray = field(default_factory=lambda: DEFAULT_BOUNDS["mbsmc"][0])
    bounds_hi: np.ndarray = field(default_factory=lambda: DEFAULT_BOUNDS["mbsmc"][1])
    rng_seed: int = 0

    def __post_init__(self):
        lo = np.asarray(self.bounds_lo, dtype=float).reshape(-1)
        hi = np.asarray(self.bounds_hi, dtype=float).reshape(-1)
        if lo.shape != hi.shape or np.any(lo >= hi):
            raise ValueError("bounds must satisfy lo < hi element-wise")
        if self.particle_count < 2:
            raise ValueError("particle_count must be at least 2")
        for name in ("inertia", "cognitive", "social"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        object.__setattr__(self, "bounds_lo", lo)
        object.__setattr__(self, "bounds_hi", hi)


@dataclass(frozen=True)
class CostWeights:
    """Weights of the tracking / smoothness / effort composite cost."""

    w_rmse: float = 1.0
    w_smooth: float = 0.01
    w_effort: float = 1e-4

    def __post_init__(self):
        if min(self.w_rmse, self.w_smooth, self.w_effort) < 0.0:
            raise ValueError("cost weights must be non-negative")
        if max(self.w_rmse, self.w_smooth, self.w_effort) <= 0.0:
            raise ValueError("at least one cost weight must be positive")


def tracking_cost(log: SimulationLog, weights: CostWeights = CostWeights()) -> float:
    """w_rmse sum(rmse) + w_smooth sum(jerk + snap) + w_effort effort.

    Diverged runs return the fixed large penalty instead of a metric mix.
    """
    if log.diverged:
        return DIVERGENCE_PENALTY
    cost = 0.0
    if weights.w_rmse > 0.0:
        cost += weights.w_rmse * float(np.sum(rmse_joint(log)))
    if weights.w_smooth > 0.0:
        smooth = smoothness_metrics(log)
        cost += weights.w_smooth * float(np.sum(smooth["jerk"]) + np.sum(smooth["snap"]))
    if weights.w_effort > 0.0:
        cost += weights.w_effort * control_effort(log)
    if not np.isfinite(cost):
        return DIVERGENCE_PENALTY
    return cost


@dataclass(frozen=True)
class PSOResult:
    best_params: np.ndarray
    best_cost: float
    history: np.ndarray        # global-best cost after the initial sweep and each iteration
    param_history: np.ndarray  # matching global-best positions, row per history entry


def pso_tune(objective, config: SwarmConfig) -> PSOResult:
    """Global-best particle swarm minimization on a bounded box.

    Velocity update v <- w v + c1 r1 (pbest - x) + c2 r2 (gbest - x) with
    positions clamped to the bounds; particle 0 is seeded at the all-ones
    point.  Raises if no particle evaluates finite at iteration 0.
    """
    lo, hi = config.bounds_lo, config.bounds_hi
    dim = lo.shape[0]
    count = config.particle_count
    rng = np.random.default_rng(config.rng_seed)

    x = rng.uniform(lo, hi, size=(count, dim))
    x[0] = np.clip(np.ones(dim), lo, hi)
    v = np.zeros((count, dim))

    costs = np.array([float(objective(x[i])) for i in range(count)])
    if not np.any(np.isfinite(costs)):
        raise RuntimeError("objective returned non-finite cost for every "
                           "particle at iteration 0")
    costs = np.where(np.isfinite(costs), costs, np.inf)

    pbest = x.copy()
    pbest_cost = costs.copy()
    g_idx = int(np.argmin(pbest_cost))
    gbest = pbest[g_idx].copy()
    gbest_cost = float(pbest_cost[g_idx])
    history = [gbest_cost]
    param_history = [gbest.copy()]

    for _ in range(config.iterations):
        r1 = rng.random((count, dim))
        r2 = rng.random((count, dim))
        v = (config.inertia * v
             + config.cognitive * r1 * (pbest - x)
             + config.social * r2 * (gbest - x))
        x = np.clip(x + v, lo, hi)
        for i in range(count):
            c = float(objective(x[i]))
            if not np.isfinite(c):
                c = np.inf
            if c < pbest_cost[i]:
                pbest_cost[i] = c
                pbest[i] = x[i].copy()
        for i in range(count):
            if pbest_cost[i] < gbest_cost:
                gbest_cost = float(pbest_cost[i])
                gbest = pbest[i].copy()
        history.append(gbest_cost)
        param_history.append(gbest.copy())

    return PSOResult(best_params=gbest, best_cost=gbest_cost,
                     history=np.asarray(history),
                     param_history=np.asarray(param_history))


def gains_from_vector(kind: str, vec: np.ndarray):
    vec = np.asarray(vec, dtype=float).reshape(-1)
    if kind in ("mbsmc", "nmbsmc"):
        return SlidingParams(p1=float(vec[0]), p2=float(vec[1]), p3=float(vec[2]))
    if kind == "pid":
        return PIDGains(kp=float(vec[0]), ki=float(vec[1]), kd=float(vec[2]))
    raise ValueError(f"unknown controller kind {kind!r}")


@dataclass(frozen=True)
class TuningResult:
    kind: str
    gains: object
    best_cost: float
    history: np.ndarray
    param_history: np.ndarray
    start_cost: float


def tune_controller(scenario, controller_kind: str,
                    weights: CostWeights = CostWeights(),
                    swarm_config: SwarmConfig | None = None) -> TuningResult:
    """Tune one controller's gains on a scenario by full closed-loop runs.

    Each particle evaluation simulates the complete scenario with the
    candidate gains and scores it with :func:`tracking_cost`.
    """
    from .harness import run_scenario

    if swarm_config is None:
        lo, hi = DEFAULT_BOUNDS[controller_kind]
        swarm_config = SwarmConfig(bounds_lo=lo, bounds_hi=hi)

    def objective(vec: np.ndarray) -> float:
        gains = gains_from_vector(controller_kind, vec)
        run = replace(scenario, controller=controller_kind,
                      gains={**scenario.gains, controller_kind: gains})
        return tracking_cost(run_scenario(run), weights)

    start_cost = float(objective(np.clip(np.ones(swarm_config.bounds_lo.shape[0]),
                                         swarm_config.bounds_lo,
                                         swarm_config.bounds_hi)))
    result = pso_tune(objective, swarm_config)
    return TuningResult(kind=controller_kind,
                        gains=gains_from_vector(controller_kind, result.best_params),
                        best_cost=result.best_cost,
                        history=result.history,
                        param_history=result.param_history,
                        start_cost=start_cost)


def history_to_csv(result, path) -> None:
    """iteration, gbest_cost, gbest params (iteration 0 is the initial sweep)."""
    history = np.asarray(result.history, dtype=float)
    params = np.asarray(result.param_history, dtype=float)
    dim = params.shape[1]
    data = np.column_stack([np.arange(history.shape[0]), history, params])
    header = "iteration,gbest_cost," + ",".join(f"g{i + 1}" for i in range(dim))
    np.savetxt(path, data, delimiter=",", header=header,
               comments="", fmt=["%d"] + ["%.17g"] * (1 + dim))

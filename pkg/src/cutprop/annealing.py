"""Annealed search for the backpropagation group budget.

The objective for an integer budget w is: backpropagate the observable
with max_qwc_groups=w, then count the executions needed to cut whatever
circuit remains (zero if everything was absorbed). The annealer keeps two
deliberate quirks of the procedure it implements: neighbors are drawn
around the best-so-far point rather than the accepted point, and the
default temperature schedule divides by the running iteration counter
plus one each step, which decays factorially fast. A conventional
geometric schedule is available behind ``cooling``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .backprop import backpropagate
from .circuits import Circuit
from .cutting import cost, find_cuts
from .paulis import Observable, canonicalize, group_qwc


class AnnealError(ValueError):
    pass


@dataclass(frozen=True)
class SAConfig:
    bound_lower: int = 1
    bound_upper: int = 40
    step_size: int = 4
    t0: float = 10.0
    num_iters: int = 20
    restarts: int = 5
    seed: int = 0
    cooling: str = "literal"  # "literal": T <- T/(k+1); "geometric": T <- 0.9*T

    def __post_init__(self):
        if self.bound_lower < 1:
            raise AnnealError("bound_lower must be >= 1")
        if self.bound_lower > self.bound_upper:
            raise AnnealError("bound_lower must not exceed bound_upper")
        if self.num_iters < 1:
            raise AnnealError("num_iters must be >= 1")
        if self.restarts < 1:
            raise AnnealError("restarts must be >= 1")
        if self.cooling not in ("literal", "geometric"):
            raise AnnealError(f"unknown cooling schedule {self.cooling!r}")


def objective(
    circuit: Circuit,
    obs: Observable,
    w: int,
    slicing: str = "auto",
    trunc_budget_per_slice: float = 0.0,
    cut_seed: int = 0,
) -> int:
    """Executions needed after backpropagating with budget w and cutting."""
    if w < 1:
        raise AnnealError("w must be >= 1")
    result = backpropagate(circuit, obs, w, trunc_budget_per_slice, slicing)
    if result.fully_absorbed:
        return 0
    plan = find_cuts(result.reduced_circuit, force_bipartition=True, seed=cut_seed)
    return cost(plan, result.evolved_obs).total_executions


class ObjectiveEvaluator:
    """Shares the w-independent absorption trajectory across objective calls.

    The conjugated observable after k slices does not depend on w; only the
    stopping slice does. One sweep records the running-max group count and
    snapshots at each point where it increases, so evaluating the objective
    for any w is a lookup plus one cut search (also memoized).
    """

    def __init__(
        self,
        circuit: Circuit,
        obs: Observable,
        w_cap: int,  # budgets above this cannot be evaluated (sweep stops there)
        slicing: str = "auto",
        trunc_budget_per_slice: float = 0.0,
        cut_seed: int = 0,
    ):
        self.circuit = circuit
        self.obs = canonicalize(obs)
        self.slicing = slicing
        self.trunc = trunc_budget_per_slice
        self.cut_seed = cut_seed
        self.w_cap = w_cap
        self.calls = 0
        self._cost_by_boundary: dict[int, int] = {}
        self._sweep(w_cap)

    def _sweep(self, w_cap: int) -> None:
        from .circuits import slice_circuit
        from .backprop import conjugate_gate, truncate

        slices = slice_circuit(self.circuit, self.slicing)
        current = self.obs
        running_max = 0
        boundary = len(self.circuit.gates)
        # checkpoints[i] = (threshold, boundary, obs): absorbing is blocked
        # beyond `boundary` unless w >= the next checkpoint's threshold.
        self.checkpoints: list[tuple[int, int, Observable]] = []
        for sl in reversed(slices):
            cand = current
            for gate in reversed(self.circuit.gates[sl.start : sl.stop]):
                cand = conjugate_gate(cand, gate)
            if self.trunc > 0:
                cand, _ = truncate(cand, self.trunc)
            groups = group_qwc(cand).group_count
            if groups > w_cap:
                self.checkpoints.append((running_max, boundary, current))
                self.full_absorption_max = None
                return
            if groups > running_max:
                self.checkpoints.append((running_max, boundary, current))
                running_max = groups
            current = cand
            boundary = sl.start
        self.checkpoints.append((running_max, boundary, current))
        self.full_absorption_max = running_max

    def evaluate(self, w: int) -> int:
        """Same value as :func:`objective` for this circuit/observable."""
        if w < 1:
            raise AnnealError("w must be >= 1")
        if w > self.w_cap and self.full_absorption_max is None:
            raise AnnealError(f"budget {w} exceeds the sweep cap {self.w_cap}")
        self.calls += 1
        if self.full_absorption_max is not None and w >= self.full_absorption_max:
            return 0
        chosen = self.checkpoints[0]
        for threshold, boundary, obs in self.checkpoints:
            if w >= threshold:
                chosen = (threshold, boundary, obs)
        _, boundary, obs = chosen
        if boundary in self._cost_by_boundary:
            base_plan_cost = self._cost_by_boundary[boundary]
        else:
            plan = find_cuts(
                self.circuit.prefix(boundary), force_bipartition=True, seed=self.cut_seed
            )
            base_plan_cost = 9**plan.kg * 16**plan.kw
            self._cost_by_boundary[boundary] = base_plan_cost
        groups = group_qwc(obs).group_count if obs.terms else 1
        return groups * base_plan_cost

    def __call__(self, w: int) -> int:
        return self.evaluate(w)


def accept_move(delta: float, temperature: float, rng: np.random.Generator) -> bool:
    """Metropolis rule: downhill or equal always moves, uphill with exp(-d/T)."""
    if delta <= 0:
        return True
    if temperature <= 0:
        return False
    return bool(rng.random() < math.exp(-delta / temperature))


@dataclass
class AnnealResult:
    w_opt: int
    opt_num_circuits: int
    cache: dict[int, int]
    iterations: list[dict] = field(default_factory=list)
    seed: tuple | int = 0


def anneal(
    circuit: Circuit | None,
    obs: Observable | None,
    config: SAConfig,
    objective_fn: Callable[[int], int] | None = None,
    cache: dict[int, int] | None = None,
    run_index: int = 0,
) -> AnnealResult:
    """One annealing run over integer budgets in [bound_lower, bound_upper].

    Every probed w is clamped to the bounds and the objective is evaluated
    at most once per distinct w thanks to the shared cache.
    """
    if objective_fn is None:
        if circuit is None or obs is None:
            raise AnnealError("need a circuit and observable or an objective_fn")
        objective_fn = ObjectiveEvaluator(circuit, obs, config.bound_upper)
    cache = {} if cache is None else cache
    rng = np.random.default_rng((config.seed, run_index))

    def evaluate(w: int) -> tuple[int, bool]:
        if w in cache:
            return cache[w], True
        value = objective_fn(w)
        cache[w] = value
        return value, False

    # The initializer draws from the two-element set
    # {bound_lower, bound_upper}, so restarts probe both ends of the range.
    w_opt = int(rng.choice((config.bound_lower, config.bound_upper)))
    opt_num_circuits, _ = evaluate(w_opt)
    w, num_circuits = w_opt, opt_num_circuits
    temperature = config.t0
    log: list[dict] = []
    for k in range(config.num_iters + 1):
        w_new = int(rng.integers(w_opt - config.step_size, w_opt + config.step_size + 1))
        w_new = max(config.bound_lower, min(config.bound_upper, w_new))
        num_new, hit = evaluate(w_new)
        if num_new < opt_num_circuits:
            opt_num_circuits, w_opt = num_new, w_new
        accepted = accept_move(num_new - num_circuits, temperature, rng)
        if accepted:
            w, num_circuits = w_new, num_new
        log.append(
            {
                "iter": k,
                "w": w_new,
                "num_circuits": num_new,
                "accepted": accepted,
                "cache_hit": hit,
                "temperature": temperature,
                "best_w": w_opt,
                "best_num_circuits": opt_num_circuits,
            }
        )
        if config.cooling == "literal":
            temperature = temperature / (k + 1)
        else:
            temperature = 0.9 * temperature
    return AnnealResult(w_opt, opt_num_circuits, cache, log, (config.seed, run_index))


@dataclass
class ParallelAnnealResult:
    w_opt: int
    opt_num_circuits: int
    cache: dict[int, int]
    runs: list[AnnealResult]


def parallel_anneal(
    circuit: Circuit | None,
    obs: Observable | None,
    config: SAConfig,
    objective_fn: Callable[[int], int] | None = None,
) -> ParallelAnnealResult:
    """Restart runs with derived seeds sharing one evaluation cache.

    Runs are executed in a fixed order; because the objective is pure and
    the cache is idempotent, the best (cost, w) pair is independent of any
    interleaving, so this matches a concurrent execution of the same seeds.
    """
    if objective_fn is None:
        if circuit is None or obs is None:
            raise AnnealError("need a circuit and observable or an objective_fn")
        objective_fn = ObjectiveEvaluator(circuit, obs, config.bound_upper)
    shared: dict[int, int] = {}
    runs = [
        anneal(circuit, obs, config, objective_fn=objective_fn, cache=shared, run_index=i)
        for i in range(config.restarts)
    ]
    best = min(runs, key=lambda r: (r.opt_num_circuits, r.w_opt))
    return ParallelAnnealResult(best.w_opt, best.opt_num_circuits, shared, runs)


@dataclass
class OptimizeResult:
    w_opt: int | None  # None when vanilla cutting is at least as good
    chosen_cost: int
    sa_cost: int
    sa_w: int
    vanilla_cost: int
    cache: dict[int, int]
    runs: list[AnnealResult]


def optimize_budget(
    circuit: Circuit,
    obs: Observable,
    config: SAConfig,
    slicing: str = "auto",
    trunc_budget_per_slice: float = 0.0,
    cut_seed: int = 0,
) -> OptimizeResult:
    """Annealed budget search with a vanilla-cutting fallback.

    The returned recommendation is never worse than cutting the original
    circuit directly: the vanilla cost enters the final comparison as a
    candidate.
    """
    evaluator = ObjectiveEvaluator(
        circuit, obs, config.bound_upper, slicing, trunc_budget_per_slice, cut_seed
    )
    par = parallel_anneal(None, None, config, objective_fn=evaluator)
    vanilla_plan = find_cuts(circuit, force_bipartition=True, seed=cut_seed)
    vanilla_cost = cost(vanilla_plan, obs).total_executions
    if par.opt_num_circuits <= vanilla_cost:
        return OptimizeResult(
            par.w_opt, par.opt_num_circuits, par.opt_num_circuits, par.w_opt,
            vanilla_cost, par.cache, par.runs,
        )
    return OptimizeResult(
        None, vanilla_cost, par.opt_num_circuits, par.w_opt,
        vanilla_cost, par.cache, par.runs,
    )

"""Covariance Matrix Adaptation Evolution Strategy (minimization).

Standard formulation with positive recombination weights: rank-based weighted
recombination of the mean, cumulative evolution paths for step-size control
and the rank-one covariance term, and a rank-mu covariance update. The
``ask``/``tell`` interface owns a seeded generator, so runs are exactly
reproducible; candidate evaluation order never affects the result because
``tell`` sorts with a stable (fitness, index) key.

Bounds, when configured, are enforced by clipping sampled candidates before
they are returned from ``ask``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CmaError


@dataclass(frozen=True)
class CmaConfig:
    dimension: int
    sigma0: float = 0.33
    population: int = 40
    max_generations: int = 60
    seed: int = 0
    mean0: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        if self.dimension < 1:
            raise CmaError(f"dimension must be >= 1, got {self.dimension}")
        if self.population < 2:
            raise CmaError(f"population must be >= 2, got {self.population}")
        if not self.sigma0 > 0:
            raise CmaError(f"sigma0 must be positive, got {self.sigma0}")
        if self.max_generations < 0:
            raise CmaError("max_generations must be >= 0")
        for name in ("mean0", "lower", "upper"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=np.float64).reshape(-1)
                if v.shape != (self.dimension,):
                    raise CmaError(f"{name} must have length {self.dimension}")
                object.__setattr__(self, name, v)
        if self.lower is not None and self.upper is not None and np.any(self.lower > self.upper):
            raise CmaError("lower bound exceeds upper bound")


class CmaState:
    """Search distribution state; mutated only by ``tell``."""

    def __init__(self, config: CmaConfig):
        d = config.dimension
        lam = config.population
        self.config = config
        self.mean = (config.mean0.copy() if config.mean0 is not None else np.zeros(d))
        self.sigma = float(config.sigma0)
        self.C = np.eye(d)
        self.p_sigma = np.zeros(d)
        self.p_c = np.zeros(d)
        self.generation = 0
        self.rng = np.random.default_rng(config.seed)

        mu = lam // 2
        raw = np.log((lam + 1) / 2.0) - np.log(np.arange(1, mu + 1))
        self.weights = raw / raw.sum()
        self.mu = mu
        self.mu_eff = 1.0 / float((self.weights**2).sum())
        self.c_sigma = (self.mu_eff + 2.0) / (d + self.mu_eff + 5.0)
        self.d_sigma = (
            1.0
            + 2.0 * max(0.0, math.sqrt((self.mu_eff - 1.0) / (d + 1.0)) - 1.0)
            + self.c_sigma
        )
        self.c_c = (4.0 + self.mu_eff / d) / (d + 4.0 + 2.0 * self.mu_eff / d)
        self.c_1 = 2.0 / ((d + 1.3) ** 2 + self.mu_eff)
        self.c_mu = min(
            1.0 - self.c_1,
            2.0 * (self.mu_eff - 2.0 + 1.0 / self.mu_eff) / ((d + 2.0) ** 2 + self.mu_eff),
        )
        self.chi_n = math.sqrt(d) * (1.0 - 1.0 / (4.0 * d) + 1.0 / (21.0 * d * d))

    def _decompose(self) -> tuple[np.ndarray, np.ndarray]:
        """(B, D): eigenbasis and per-axis standard deviations of C."""
        eigvals, eigvecs = np.linalg.eigh(self.C)
        if not np.all(np.isfinite(eigvals)) or eigvals.min() <= 0.0:
            raise CmaError(
                f"covariance decomposition failed at generation {self.generation}: "
                f"min eigenvalue {eigvals.min()}"
            )
        return eigvecs, np.sqrt(eigvals)


def cma_init(config: CmaConfig) -> CmaState:
    return CmaState(config)


def cma_ask(state: CmaState) -> np.ndarray:
    """Sample one population (lambda, d); advances the state's generator."""
    cfg = state.config
    basis, scales = state._decompose()
    z = state.rng.standard_normal((cfg.population, cfg.dimension))
    x = state.mean + state.sigma * (z * scales) @ basis.T
    if cfg.lower is not None:
        x = np.maximum(x, cfg.lower)
    if cfg.upper is not None:
        x = np.minimum(x, cfg.upper)
    return x


def cma_tell(state: CmaState, candidates: np.ndarray, fitnesses) -> CmaState:
    """Rank-based distribution update (lower fitness is better); returns state."""
    cfg = state.config
    x = np.asarray(candidates, dtype=np.float64)
    f = np.asarray(fitnesses, dtype=np.float64).reshape(-1)
    if x.shape != (cfg.population, cfg.dimension):
        raise CmaError(f"candidates must be ({cfg.population}, {cfg.dimension}), got {x.shape}")
    if f.shape[0] != cfg.population:
        raise CmaError(f"{f.shape[0]} fitnesses for {cfg.population} candidates")
    if not np.all(np.isfinite(f)):
        raise CmaError("non-finite fitness values")

    # stable (fitness, index) ranking makes ties deterministic
    order = np.lexsort((np.arange(cfg.population), f))
    selected = x[order[: state.mu]]

    mean_old = state.mean
    mean_new = state.weights @ selected
    y_w = (mean_new - mean_old) / state.sigma

    basis, scales = state._decompose()
    c_inv_sqrt_y = basis @ ((basis.T @ y_w) / scales)
    state.p_sigma = (1.0 - state.c_sigma) * state.p_sigma + math.sqrt(
        state.c_sigma * (2.0 - state.c_sigma) * state.mu_eff
    ) * c_inv_sqrt_y

    gen1 = state.generation + 1
    ps_norm = float(np.linalg.norm(state.p_sigma))
    h_sigma = ps_norm / math.sqrt(
        1.0 - (1.0 - state.c_sigma) ** (2 * gen1)
    ) < (1.4 + 2.0 / (cfg.dimension + 1.0)) * state.chi_n

    state.p_c = (1.0 - state.c_c) * state.p_c + (
        math.sqrt(state.c_c * (2.0 - state.c_c) * state.mu_eff) * y_w
        if h_sigma
        else 0.0
    )

    ys = (selected - mean_old) / state.sigma
    rank_mu = (state.weights[:, None] * ys).T @ ys
    delta_h = (1.0 - int(h_sigma)) * state.c_c * (2.0 - state.c_c)
    state.C = (
        (1.0 - state.c_1 - state.c_mu) * state.C
        + state.c_1 * (np.outer(state.p_c, state.p_c) + delta_h * state.C)
        + state.c_mu * rank_mu
    )
    state.C = (state.C + state.C.T) / 2.0  # keep exact symmetry

    state.sigma *= math.exp((state.c_sigma / state.d_sigma) * (ps_norm / state.chi_n - 1.0))
    if not (math.isfinite(state.sigma) and state.sigma > 0.0):
        raise CmaError(f"step size broke down: sigma={state.sigma}")
    state.mean = mean_new
    state.generation = gen1
    return state


@dataclass
class CmaResult:
    best_x: np.ndarray
    best_fitness: float
    evaluations: int
    history: list[dict] = field(default_factory=list)


def cma_minimize(objective, config: CmaConfig, trace_path=None) -> CmaResult:
    """Run ask/evaluate/tell for max_generations; track the best-ever candidate.

    The initial mean is always evaluated first, so the result is never worse
    than the starting point; with max_generations=0 that is all that happens.
    Per-generation JSON lines go to ``trace_path`` when given.
    """
    state = cma_init(config)
    mean0 = state.mean.copy()
    if config.lower is not None:
        mean0 = np.maximum(mean0, config.lower)
    if config.upper is not None:
        mean0 = np.minimum(mean0, config.upper)
    best_x = mean0
    best_f = float(objective(mean0))
    evaluations = 1
    history: list[dict] = []
    trace = open(trace_path, "w", encoding="utf-8") if trace_path else None
    try:
        for _ in range(config.max_generations):
            candidates = cma_ask(state)
            fitnesses = np.empty(config.population)
            for i in range(config.population):  # index order: reproducible
                try:
                    fitnesses[i] = float(objective(candidates[i]))
                except Exception as exc:
                    raise CmaError(f"objective failed on candidate {i}: {exc}") from exc
            evaluations += config.population
            gen_best = int(np.lexsort((np.arange(config.population), fitnesses))[0])
            if fitnesses[gen_best] < best_f:
                best_f = float(fitnesses[gen_best])
                best_x = candidates[gen_best].copy()
            cma_tell(state, candidates, fitnesses)
            record = {
                "generation": state.generation,
                "best_fitness": best_f,
                "sigma": state.sigma,
                "mean": state.mean.tolist(),
            }
            history.append(record)
            if trace is not None:
                trace.write(json.dumps(record, sort_keys=True) + "\n")
    finally:
        if trace is not None:
            trace.close()
    return CmaResult(best_x=best_x, best_fitness=best_f, evaluations=evaluations,
                     history=history)

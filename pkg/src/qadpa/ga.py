"""Real-coded genetic algorithm with a single seeded random stream.

Every random draw of a generation (tournaments, crossover coins and
weights, mutation masks and steps) is taken before the offspring are
evaluated, so batching or threading the fitness calls cannot change the
trajectory.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from qadpa.errors import ParameterError

BatchFitness = Callable[[np.ndarray], np.ndarray]


@dataclass
class GAOutcome:
    best_x: np.ndarray
    best_fitness: float
    history: list[float] = field(default_factory=list)
    evaluations: int = 0


def _evaluate(fitness: BatchFitness, pop: np.ndarray, workers: int) -> np.ndarray:
    if workers <= 1 or len(pop) < 2 * workers:
        return np.asarray(fitness(pop), dtype=float)
    chunks = np.array_split(pop, workers)
    with ThreadPoolExecutor(max_workers=workers) as ex:
        parts = list(ex.map(fitness, chunks))
    return np.concatenate([np.asarray(p, dtype=float) for p in parts])


def run_ga(
    fitness: BatchFitness,
    lower,
    upper,
    *,
    population: int = 200,
    generations: int = 300,
    tournament: int = 3,
    elitism: int = 2,
    crossover_rate: float = 0.9,
    mutation_rate: float = 0.25,
    mutation_sigma: float = 0.05,
    seed: int = 0,
    workers: int = 1,
) -> GAOutcome:
    """Minimise ``fitness`` over the box [lower, upper].

    Tournament selection, whole-arithmetic crossover, per-gene Gaussian
    mutation with step ``mutation_sigma * (upper - lower)``, clipped to the
    box.  The ``elitism`` best individuals survive unchanged, so the
    best-so-far fitness in ``history`` never increases.
    """
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    if lo.shape != hi.shape or lo.ndim != 1 or np.any(hi <= lo):
        raise ParameterError("bounds must be 1-D with upper > lower")
    if population < 2:
        raise ParameterError("population must be at least 2")
    if not 0 <= elitism < population:
        raise ParameterError("elitism must be in [0, population)")
    if tournament < 1:
        raise ParameterError("tournament size must be positive")
    if not 0 <= crossover_rate <= 1 or not 0 <= mutation_rate <= 1:
        raise ParameterError("rates must lie in [0, 1]")

    rng = np.random.default_rng(seed)
    dim = lo.size
    span = hi - lo
    pop = lo + rng.random((population, dim)) * span
    fit = _evaluate(fitness, pop, workers)
    evals = population
    history = []

    n_children = population - elitism
    n_pairs = (n_children + 1) // 2
    for _ in range(generations):
        order = np.argsort(fit, kind="stable")
        history.append(float(fit[order[0]]))

        contenders = rng.integers(0, population, size=(2 * n_pairs, tournament))
        cross = rng.random(n_pairs) < crossover_rate
        alpha = rng.random((n_pairs, 1))
        mutate = rng.random((2 * n_pairs, dim)) < mutation_rate
        steps = rng.standard_normal((2 * n_pairs, dim)) * (mutation_sigma * span)

        winners = contenders[np.arange(2 * n_pairs), np.argmin(fit[contenders], axis=1)]
        pa = pop[winners[0::2]]
        pb = pop[winners[1::2]]
        ca = np.where(cross[:, None], alpha * pa + (1 - alpha) * pb, pa)
        cb = np.where(cross[:, None], (1 - alpha) * pa + alpha * pb, pb)
        kids = np.empty((2 * n_pairs, dim))
        kids[0::2] = ca
        kids[1::2] = cb
        kids = np.clip(kids + np.where(mutate, steps, 0.0), lo, hi)[:n_children]

        kid_fit = _evaluate(fitness, kids, workers)
        evals += len(kids)
        elite = order[:elitism]
        pop = np.concatenate([pop[elite], kids])
        fit = np.concatenate([fit[elite], kid_fit])

    best = int(np.argmin(fit))
    history.append(float(fit[best]))
    return GAOutcome(pop[best].copy(), float(fit[best]), history, evals)

"""Electromagnetism-like optimization over a bounded continuous box.

Population-based global minimizer: every candidate carries a charge derived
from its fitness relative to the population, moves under the normalized sum
of Coulomb-style attraction/repulsion forces, and is optionally refined by a
coordinate-wise stochastic local search. The best particle never moves, so
the best fitness seen is monotone over iterations.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "Bounds",
    "Particle",
    "EmoParams",
    "LocalSearchMode",
    "OptimizationResult",
    "IterationSnapshot",
    "ObjectiveEvaluationError",
    "initialize_population",
    "compute_charges",
    "compute_forces",
    "move_particles",
    "local_search",
    "optimize",
]


class ObjectiveEvaluationError(RuntimeError):
    """The objective returned a non-finite value."""

    def __init__(self, position, value):
        self.position = np.array(position, dtype=float)
        self.value = value
        super().__init__(
            f"objective returned non-finite value {value!r} at "
            f"{self.position.tolist()}"
        )


class LocalSearchMode(enum.Enum):
    NONE = "none"
    BEST_ONLY = "best_only"
    ALL = "all"


@dataclass(frozen=True)
class Bounds:
    """Axis-aligned box [lower, upper] in n dimensions, lower < upper."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.ndim != 1 or lo.shape != hi.shape or lo.size < 1:
            raise ValueError("lower and upper must be 1-D vectors of equal length")
        if not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)):
            raise ValueError("bounds must be finite")
        if not np.all(lo < hi):
            raise ValueError("every lower bound must be strictly below its upper bound")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def n(self) -> int:
        return int(self.lower.size)

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)


@dataclass
class Particle:
    """One candidate position with its fitness and fitness-derived charge."""

    position: np.ndarray
    fitness: float = np.nan
    charge: float = np.nan

    def __post_init__(self):
        self.position = np.array(self.position, dtype=float)


@dataclass(frozen=True)
class EmoParams:
    """Run parameters. Defaults follow the circle-detector setup:
    population 10, 20 iterations, one local-search trial per dimension with
    step 3, applied to the current best particle only."""

    population_size: int = 10
    max_iterations: int = 20
    local_search_iters: int = 2
    local_search_step: float = 3.0
    local_search_mode: LocalSearchMode = LocalSearchMode.BEST_ONLY
    rng_seed: int = 0

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.local_search_iters < 0:
            raise ValueError("local_search_iters must be non-negative")
        if self.local_search_step <= 0:
            raise ValueError("local_search_step must be positive")


@dataclass(frozen=True)
class OptimizationResult:
    best_position: np.ndarray
    best_fitness: float
    iterations_run: int
    history: list[float] = field(default_factory=list)


@dataclass(frozen=True)
class IterationSnapshot:
    """Per-iteration state handed to an optimize() observer.

    Charges and forces were computed for the pre-movement positions of this
    iteration; ``positions``/``fitnesses`` are the post-movement state.
    """

    iteration: int
    positions: np.ndarray
    fitnesses: np.ndarray
    charges: np.ndarray
    forces: np.ndarray
    best_position: np.ndarray
    best_fitness: float


def _evaluate(objective: Callable[[np.ndarray], float], x: np.ndarray) -> float:
    value = float(objective(x))
    if not np.isfinite(value):
        raise ObjectiveEvaluationError(x, value)
    return value


def initialize_population(
    bounds: Bounds, m: int, rng: np.random.Generator
) -> list[Particle]:
    """Draw m particles independently uniform in the box. Fitness and charge
    are left unset for the caller to fill."""
    if m < 2:
        raise ValueError(f"population size must be at least 2, got {m}")
    positions = rng.uniform(bounds.lower, bounds.upper, size=(m, bounds.n))
    return [Particle(position=row) for row in positions]


def compute_charges(fitnesses: Sequence[float], n: int) -> np.ndarray:
    """Charge of each particle from its fitness gap to the population best.

    q^p = exp(-n * (f_p - f_best) / sum_h (f_h - f_best)); the best particle
    gets exactly 1 and all charges lie in (0, 1]. When every fitness is equal
    the spread is zero and all charges are defined as 1.
    """
    f = np.asarray(fitnesses, dtype=float)
    if f.size == 0:
        raise ValueError("fitnesses must be non-empty")
    if n < 1:
        raise ValueError("dimension n must be at least 1")
    spread = float(np.sum(f - f.min()))
    if spread <= 0.0:
        return np.ones_like(f)
    return np.exp(-n * (f - f.min()) / spread)


def compute_forces(particles: Sequence[Particle]) -> np.ndarray:
    """Superposed pairwise forces, one unit vector (or zero) per particle.

    A better particle attracts, a worse or equal one repels, with magnitude
    q_p*q_h / d^2. Coincident pairs contribute nothing. Each resultant is
    normalized to unit length; an exactly zero resultant stays zero.
    """
    if len(particles) < 2:
        raise ValueError("need at least 2 particles to compute forces")
    positions = np.stack([p.position for p in particles])
    fitness = np.array([p.fitness for p in particles], dtype=float)
    charge = np.array([p.charge for p in particles], dtype=float)

    m = len(particles)
    forces = np.zeros_like(positions)
    for p in range(m):
        diff = positions - positions[p]
        d2 = np.einsum("ij,ij->i", diff, diff)
        scale = np.zeros(m)
        nz = d2 > 0.0
        scale[nz] = charge[p] * charge[nz] / d2[nz]
        sign = np.where(fitness < fitness[p], 1.0, -1.0)
        forces[p] = (diff * (sign * scale)[:, None]).sum(axis=0)

    norms = np.linalg.norm(forces, axis=1)
    nz = norms > 0.0
    forces[nz] /= norms[nz, None]
    return forces


def move_particles(
    particles: Sequence[Particle],
    forces: np.ndarray,
    bounds: Bounds,
    rng: np.random.Generator,
) -> Sequence[Particle]:
    """Move every particle except the current best along its force.

    Per dimension, a positive force component steps toward the upper bound by
    lambda * F_d * (u_d - x_d) and a non-positive one toward the lower bound
    by lambda * F_d * (x_d - l_d); lambda is drawn once per particle. With
    unit forces the update cannot leave the box; positions are clipped only
    to absorb float round-off. Fitness is left stale for the caller.
    """
    best = int(np.argmin([p.fitness for p in particles]))
    for idx, particle in enumerate(particles):
        if idx == best:
            continue
        lam = rng.random()
        x = particle.position
        f = forces[idx]
        stepped = np.where(
            f > 0.0,
            x + lam * f * (bounds.upper - x),
            x + lam * f * (x - bounds.lower),
        )
        particle.position = bounds.clip(stepped)
    return particles


def local_search(
    particle: Particle,
    objective: Callable[[np.ndarray], float],
    delta: float,
    iters: int,
    bounds: Bounds,
    rng: np.random.Generator,
) -> Particle:
    """Coordinate-wise stochastic descent around one particle.

    For each dimension the step sign is fixed by one draw, then trial points
    at distance lambda2 * delta are accepted whenever they strictly improve.
    Trials are clamped to the box. The returned fitness never exceeds the
    input fitness.
    """
    x = np.array(particle.position, dtype=float)
    fx = float(particle.fitness)
    for d in range(x.size):
        lam1 = rng.random()
        counter = 1
        while counter < iters:
            y = x.copy()
            lam2 = rng.random()
            if lam1 > 0.5:
                y[d] += lam2 * delta
            else:
                y[d] -= lam2 * delta
            y[d] = min(max(y[d], bounds.lower[d]), bounds.upper[d])
            fy = _evaluate(objective, y)
            if fy < fx:
                x, fx = y, fy
            counter += 1
    return Particle(position=x, fitness=fx, charge=particle.charge)


def optimize(
    objective: Callable[[np.ndarray], float],
    bounds: Bounds,
    params: EmoParams,
    fitness_threshold: Optional[float] = None,
    observer: Optional[Callable[[IterationSnapshot], None]] = None,
) -> OptimizationResult:
    """Run the full loop: initialize, then per iteration local search,
    charges, forces, movement and re-evaluation.

    The objective must be a deterministic finite-valued function on the box.
    ``fitness_threshold`` enables an optional early stop once the best
    fitness drops to or below it. ``observer`` is an instrumentation hook
    receiving an IterationSnapshot after each iteration.
    """
    rng = np.random.default_rng(params.rng_seed)
    particles = initialize_population(bounds, params.population_size, rng)
    for p in particles:
        p.fitness = _evaluate(objective, p.position)

    fits = np.array([p.fitness for p in particles])
    best_idx = int(np.argmin(fits))
    best_position = particles[best_idx].position.copy()
    best_fitness = float(fits[best_idx])

    history: list[float] = []
    iterations_run = 0
    for iteration in range(params.max_iterations):
        if params.local_search_mode is LocalSearchMode.BEST_ONLY:
            i = int(np.argmin([p.fitness for p in particles]))
            particles[i] = local_search(
                particles[i], objective, params.local_search_step,
                params.local_search_iters, bounds, rng,
            )
        elif params.local_search_mode is LocalSearchMode.ALL:
            for i in range(len(particles)):
                particles[i] = local_search(
                    particles[i], objective, params.local_search_step,
                    params.local_search_iters, bounds, rng,
                )

        fits = np.array([p.fitness for p in particles])
        charges = compute_charges(fits, bounds.n)
        for p, q in zip(particles, charges):
            p.charge = float(q)
        forces = compute_forces(particles)
        move_particles(particles, forces, bounds, rng)
        for p in particles:
            p.fitness = _evaluate(objective, p.position)

        fits = np.array([p.fitness for p in particles])
        i = int(np.argmin(fits))
        if fits[i] < best_fitness:
            best_fitness = float(fits[i])
            best_position = particles[i].position.copy()

        iterations_run += 1
        history.append(best_fitness)
        if observer is not None:
            observer(IterationSnapshot(
                iteration=iteration,
                positions=np.stack([p.position for p in particles]),
                fitnesses=fits.copy(),
                charges=charges.copy(),
                forces=forces.copy(),
                best_position=best_position.copy(),
                best_fitness=best_fitness,
            ))
        if fitness_threshold is not None and best_fitness <= fitness_threshold:
            break

    return OptimizationResult(
        best_position=best_position,
        best_fitness=best_fitness,
        iterations_run=iterations_run,
        history=history,
    )

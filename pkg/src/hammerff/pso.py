"""Global-best particle swarm optimization (unconstrained).

The search box is only used to draw the initial positions; particles are
free to leave it afterwards. Invalid regions must be handled by the caller
with finite penalties.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .csvio import write_rows
from .errors import ConfigurationError, NonFiniteCostError

__all__ = ["SwarmConfig", "OptimResult", "minimize"]


@dataclass(frozen=True)
class SwarmConfig:
    """PSO settings.

    ``inertia = 0.729`` and ``cognitive = social = 1.49445`` are the
    constriction-equivalent coefficients of Clerc and Kennedy.
    ``tolerance`` is relative: the run is declared converged once the global
    best improved by less than ``tolerance * |best|`` over ``stall_iterations``.
    """

    search_box: tuple
    swarm_size: int = 200
    max_iterations: int = 300
    inertia: float = 0.729
    cognitive_coeff: float = 1.49445
    social_coeff: float = 1.49445
    seed: int = 0
    tolerance: float = 1e-10
    stall_iterations: int = 50

    def __post_init__(self):
        box = np.asarray(self.search_box, dtype=float)
        if box.ndim != 2 or box.shape[1] != 2 or box.shape[0] < 1:
            raise ConfigurationError("search_box must be a sequence of (lo, hi) pairs")
        if not np.all(box[:, 0] < box[:, 1]):
            raise ConfigurationError("search_box needs lo < hi in every dimension")
        if self.swarm_size < 2:
            raise ConfigurationError("swarm_size must be >= 2")
        if self.max_iterations < 0:
            raise ConfigurationError("max_iterations must be >= 0")
        object.__setattr__(self, "search_box", tuple((float(lo), float(hi)) for lo, hi in box))

    @property
    def dim(self):
        return len(self.search_box)

    def to_dict(self):
        return {"search_box": [list(b) for b in self.search_box], "swarm_size": self.swarm_size,
                "max_iterations": self.max_iterations, "inertia": self.inertia,
                "cognitive_coeff": self.cognitive_coeff, "social_coeff": self.social_coeff,
                "seed": self.seed, "tolerance": self.tolerance,
                "stall_iterations": self.stall_iterations}


@dataclass
class OptimResult:
    best_point: np.ndarray
    best_cost: float
    evaluations: int
    converged: bool
    iterations: int
    cost_history: np.ndarray = field(repr=False)

    def write_trace(self, path):
        """Dump ``(iteration, best_cost)`` rows to CSV."""
        write_rows(path, ["iteration", "best_cost"], enumerate(self.cost_history))

    def summary(self):
        return {"best_cost": float(self.best_cost), "evaluations": int(self.evaluations),
                "iterations": int(self.iterations), "converged": bool(self.converged),
                "initial_best_cost": float(self.cost_history[0])}


def _evaluate(cost, X, vectorized, map_fn):
    if vectorized:
        c = np.asarray(cost(X), dtype=float).reshape(-1)
        if c.size != X.shape[0]:
            raise ValueError("vectorized cost must return one value per particle")
    elif map_fn is not None:
        c = np.fromiter(map_fn(cost, list(X)), dtype=float, count=X.shape[0])
    else:
        c = np.array([float(cost(x)) for x in X])
    bad = ~np.isfinite(c)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise NonFiniteCostError(f"cost returned {c[i]!r} at {X[i].tolist()}", X[i].copy())
    return c


def minimize(cost, config, vectorized=False, map_fn=None):
    """Minimize ``cost`` with a global-best particle swarm.

    Parameters
    ----------
    cost : callable
        ``cost(x) -> float`` for ``x`` of shape ``(d,)``; with ``vectorized=True``
        ``cost(X) -> (n,)`` for a whole swarm ``X`` of shape ``(n, d)``.
    config : SwarmConfig
    vectorized : bool
        Evaluate the swarm in one call.
    map_fn : callable, optional
        Order-preserving map (e.g. ``executor.map``) used for per-particle
        evaluation when not vectorized.

    Returns
    -------
    OptimResult
        ``cost_history[k]`` is the global best after iteration ``k``
        (index 0 is the initial swarm).
    """
    box = np.asarray(config.search_box)
    lo, hi = box[:, 0], box[:, 1]
    n, d = config.swarm_size, config.dim
    rng = np.random.default_rng(config.seed)

    X = lo + (hi - lo) * rng.random((n, d))
    V = np.zeros((n, d))
    c = _evaluate(cost, X, vectorized, map_fn)
    evals = n
    P, pc = X.copy(), c.copy()
    g = int(np.argmin(pc))  # lowest index wins ties
    gbest, gcost = P[g].copy(), float(pc[g])
    history = [gcost]

    converged = False
    it = 0
    w, c1, c2 = config.inertia, config.cognitive_coeff, config.social_coeff
    for it in range(1, config.max_iterations + 1):
        r1 = rng.random((n, d))
        r2 = rng.random((n, d))
        V = w * V + c1 * r1 * (P - X) + c2 * r2 * (gbest - X)
        X = X + V
        c = _evaluate(cost, X, vectorized, map_fn)
        evals += n
        better = c < pc
        P[better] = X[better]
        pc[better] = c[better]
        g = int(np.argmin(pc))
        if pc[g] < gcost:
            gbest, gcost = P[g].copy(), float(pc[g])
        history.append(gcost)
        k = config.stall_iterations
        if k and len(history) > k:
            ref = history[-1 - k]
            if ref - gcost <= config.tolerance * abs(ref):
                converged = True
                break

    return OptimResult(best_point=gbest, best_cost=gcost, evaluations=evals, converged=converged,
                       iterations=it, cost_history=np.asarray(history))

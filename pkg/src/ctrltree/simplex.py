"""Nelder-Mead simplex minimization for fitting free predicate coefficients.

The objective (a split impurity as a function of coefficient values) is
piecewise constant, so gradients do not exist and plateaus are common.
When the initial simplex lands entirely on one plateau the search restarts
from alternative anchor points before giving up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

#: anchors tried (one per restart, replicated across coordinates) when the
#: simplex around the previous start point is flat
RESTART_ANCHORS = (-1.0, 0.5, 2.0)


@dataclass
class SimplexResult:
    x: np.ndarray
    fx: float
    evaluations: int
    restarts: int


def _initial_simplex(x0: np.ndarray) -> np.ndarray:
    n = len(x0)
    simplex = np.tile(x0, (n + 1, 1))
    for i in range(n):
        step = 0.25 * abs(x0[i]) if x0[i] != 0 else 0.25
        simplex[i + 1, i] += step
    return simplex

def _run(f: Callable[[np.ndarray], float], simplex: np.ndarray,
         max_iter: int, ftol: float) -> tuple[np.ndarray, np.ndarray, int]:
    evals = 0

    def call(x) -> float:
        nonlocal evals
        evals += 1
        v = f(x)
        return v if math.isfinite(v) else math.inf

    values = np.array([call(x) for x in simplex])
    n = simplex.shape[1]
    for _ in range(max_iter):
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]
        finite = values[np.isfinite(values)]
        if len(finite) == len(values) and float(finite[-1] - finite[0]) <= ftol:
            break
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        reflected = centroid + (centroid - worst)
        fr = call(reflected)
        if fr < values[0]:
            expanded = centroid + 2.0 * (centroid - worst)
            fe = call(expanded)
            if fe < fr:
                simplex[-1], values[-1] = expanded, fe
            else:
                simplex[-1], values[-1] = reflected, fr
        elif fr < values[-2]:
            simplex[-1], values[-1] = reflected, fr
        else:
            contracted = centroid + 0.5 * (worst - centroid)
            fc = call(contracted)
            if fc < values[-1]:
                simplex[-1], values[-1] = contracted, fc
            else:
                # shrink toward the best vertex
                for i in range(1, n + 1):
                    simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0])
                    values[i] = call(simplex[i])
    order = np.argsort(values, kind="stable")
    return simplex[order], values[order], evals


def minimize(f: Callable[[np.ndarray], float],
             x0: Sequence[float],
             max_iter: int = 200,
             ftol: float = 1e-6) -> SimplexResult:
    """Minimize ``f`` starting at ``x0``, restarting from the configured
    anchor points whenever the current start yields a flat initial simplex."""
    x0 = np.asarray(x0, dtype=np.float64)
    starts = [x0] + [np.full_like(x0, a) for a in RESTART_ANCHORS]

    best_x, best_f = x0, math.inf
    total_evals = 0
    restarts = 0
    for k, start in enumerate(starts):
        simplex = _initial_simplex(start)
        initial = [f(x) for x in simplex]
        total_evals += len(initial)
        finite = [v for v in initial if math.isfinite(v)]
        degenerate = (not finite) or (max(initial) - min(initial) == 0)
        if not degenerate:
            simplex_sorted, values, evals = _run(f, simplex, max_iter, ftol)
            total_evals += evals
            if values[0] < best_f:
                best_x, best_f = simplex_sorted[0].copy(), float(values[0])
            break
        if finite and finite[0] < best_f:
            best_x, best_f = simplex[int(np.argmin(initial))].copy(), float(min(initial))
        if k < len(starts) - 1:
            restarts += 1
    return SimplexResult(best_x, best_f, total_evals, restarts)

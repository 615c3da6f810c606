"""Impurity measures, split scoring and determinization.

Classic measures (entropy, Gini, the minorities, twoing, entropy ratio)
score a node by the distribution of whole action *sets*; the multi-label
variants score it by per-action frequencies so that states sharing any
action look homogeneous.  All logarithms are base 2 and 0*log2(0) = 0.

Degenerate splits (an empty branch, zero split info, zero twoing value)
score +inf rather than raising, so candidate ranking can treat them as
ordinary worst cases.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import UnsupportedAtNodeLevel
from .model import Controller, NodeView, Predicate

INF = math.inf

#: absolute tolerance for comparing impurity values
IMPURITY_ATOL = 1e-12


class ImpurityMeasure(Enum):
    ENTROPY = "entropy"
    ENTROPY_RATIO = "entropy-ratio"
    GINI = "gini"
    TWOING = "twoing"
    SUM_MINORITY = "sum-minority"
    MAX_MINORITY = "max-minority"
    MULTI_LABEL_ENTROPY = "multi-label-entropy"
    MULTI_LABEL_GINI = "multi-label-gini"

    @classmethod
    def parse(cls, text: str) -> "ImpurityMeasure":
        aliases = {"mle": cls.MULTI_LABEL_ENTROPY, "mlgini": cls.MULTI_LABEL_GINI,
                   "entropy_ratio": cls.ENTROPY_RATIO,
                   "sum_minority": cls.SUM_MINORITY, "max_minority": cls.MAX_MINORITY,
                   "multi_label_entropy": cls.MULTI_LABEL_ENTROPY,
                   "multi_label_gini": cls.MULTI_LABEL_GINI}
        key = text.strip().lower()
        if key in aliases:
            return aliases[key]
        for m in cls:
            if m.value == key:
                return m
        raise ValueError(f"unknown impurity measure {text!r}")


#: measures defined for single nodes (not only whole splits)
NODE_LEVEL = frozenset({
    ImpurityMeasure.ENTROPY, ImpurityMeasure.GINI,
    ImpurityMeasure.SUM_MINORITY, ImpurityMeasure.MAX_MINORITY,
    ImpurityMeasure.MULTI_LABEL_ENTROPY, ImpurityMeasure.MULTI_LABEL_GINI,
})


class DetMode(Enum):
    NONE = "none"
    SAFE_EARLY_STOP = "safe-early-stop"
    PRE_MAXFREQ = "maxfreq"
    PRE_MINNORM = "minnorm"
    PRE_RANDOM = "random"


@dataclass(frozen=True)
class Determinizer:
    mode: DetMode = DetMode.NONE
    seed: int | None = None

    def __post_init__(self):
        if self.mode is DetMode.PRE_RANDOM and self.seed is None:
            raise ValueError("random determinizer requires an explicit seed")

    @property
    def is_preprocess(self) -> bool:
        return self.mode in (DetMode.PRE_MAXFREQ, DetMode.PRE_MINNORM, DetMode.PRE_RANDOM)

    @classmethod
    def parse(cls, text: str, seed: int | None = None) -> "Determinizer":
        key = text.strip().lower().replace("_", "-")
        aliases = {"safe": DetMode.SAFE_EARLY_STOP, "early-stop": DetMode.SAFE_EARLY_STOP,
                   "pre-maxfreq": DetMode.PRE_MAXFREQ, "pre-minnorm": DetMode.PRE_MINNORM,
                   "pre-random": DetMode.PRE_RANDOM}
        mode = aliases.get(key)
        if mode is None:
            for m in DetMode:
                if m.value == key:
                    mode = m
                    break
        if mode is None:
            raise ValueError(f"unknown determinizer {text!r}")
        if mode is DetMode.PRE_RANDOM:
            return cls(mode, 0 if seed is None else seed)
        return cls(mode)


# --------------------------------------------------------------------------
# histogram-level primitives (shared by node_impurity, split_impurity and
# the incremental grouping search in predicates.py)


@dataclass
class PartStats:
    """Histograms of one branch of a candidate split."""
    size: int
    label_counts: np.ndarray   # n_B per distinct action set of the parent view
    action_counts: np.ndarray  # p_a per action of the controller


def part_stats(view: NodeView) -> PartStats:
    return PartStats(len(view), view.set_id_counts, view.action_counts)


def _entropy(counts: np.ndarray, total: int) -> float:
    nz = counts[counts > 0]
    p = nz / total
    return float(-(p * np.log2(p)).sum())


def _gini(counts: np.ndarray, total: int) -> float:
    nz = counts[counts > 0]
    p = nz / total
    return float(1.0 - (p * p).sum())


def _minority(counts: np.ndarray, total: int) -> float:
    return float(total - counts.max(initial=0))


def _multi_label_entropy(action_counts: np.ndarray, total: int) -> float:
    nz = action_counts[action_counts > 0]
    if np.any(nz == total):
        return 0.0
    p = nz / total
    return float(-(p * np.log2(p)).sum())


def _multi_label_gini(action_counts: np.ndarray, total: int) -> float:
    nz = action_counts[action_counts > 0]
    if np.any(nz == total):
        return 0.0
    p = nz / total
    return float(len(nz) - (p * p).sum())


_NODE_FUNCS = {
    ImpurityMeasure.ENTROPY: lambda part: _entropy(part.label_counts, part.size),
    ImpurityMeasure.GINI: lambda part: _gini(part.label_counts, part.size),
    ImpurityMeasure.SUM_MINORITY: lambda part: _minority(part.label_counts, part.size),
    ImpurityMeasure.MAX_MINORITY: lambda part: _minority(part.label_counts, part.size),
    ImpurityMeasure.MULTI_LABEL_ENTROPY:
        lambda part: _multi_label_entropy(part.action_counts, part.size),
    ImpurityMeasure.MULTI_LABEL_GINI:
        lambda part: _multi_label_gini(part.action_counts, part.size),
}


def node_impurity(view: NodeView, measure: ImpurityMeasure) -> float:
    """Impurity of a single (sub-)controller.

    Entropy H = -sum_B (n_B/|C|) log2(n_B/|C|); Gini = 1 - sum (n_B/|C|)^2;
    both minorities reduce to |C| - max_B n_B at node level.  The
    multi-label variants are 0 whenever some action occurs in every row,
    otherwise they aggregate per-action frequencies p_a.
    """
    if measure not in NODE_LEVEL:
        raise UnsupportedAtNodeLevel(f"{measure.value} has no node-level impurity")
    return _NODE_FUNCS[measure](part_stats(view))


def split_impurity_from_parts(parts: Sequence[PartStats],
                              measure: ImpurityMeasure) -> float:
    """Combine per-branch histograms into the impurity of the whole split.

    Weighted average for entropy/Gini/multi-label measures, raw sum for sum
    minority, max for max minority; entropy ratio normalizes by the split
    info and twoing (binary only) is the reciprocal of the twoing value.
    """
    if any(p.size == 0 for p in parts):
        return INF
    total = sum(p.size for p in parts)

    if measure is ImpurityMeasure.SUM_MINORITY:
        return float(sum(_minority(p.label_counts, p.size) for p in parts))
    if measure is ImpurityMeasure.MAX_MINORITY:
        return float(max(_minority(p.label_counts, p.size) for p in parts))
    if measure is ImpurityMeasure.TWOING:
        if len(parts) != 2:
            return INF
        left, right = parts
        dist = np.abs(left.label_counts / left.size - right.label_counts / right.size).sum()
        value = (left.size / total) * (right.size / total) * dist * dist
        return INF if value == 0 else float(1.0 / value)
    if measure is ImpurityMeasure.ENTROPY_RATIO:
        weights = np.array([p.size / total for p in parts])
        split_info = float(-(weights * np.log2(weights)).sum())
        if split_info == 0:
            return INF
        ent = sum((p.size / total) * _entropy(p.label_counts, p.size) for p in parts)
        return float(ent / split_info)

    node = _NODE_FUNCS[measure]
    return float(sum((p.size / total) * node(p) for p in parts))


def split_impurity(pred: Predicate, view: NodeView, measure: ImpurityMeasure) -> float:
    """Impurity of `pred` on `view`; +inf when any branch is empty."""
    index_parts = view.partition(pred)
    if any(len(p) == 0 for p in index_parts):
        return INF
    parts = [part_stats(NodeView(view.controller, p)) for p in index_parts]
    return split_impurity_from_parts(parts, measure)


def common_actions(view: NodeView) -> frozenset[str]:
    """Maximum B with B subseteq C(s) for every state of the view."""
    counts = view.action_counts
    table = view.controller.label_table
    n = len(view)
    return frozenset(table[i] for i in np.nonzero(counts == n)[0])


# --------------------------------------------------------------------------
# determinization


def _token_norm(label: str) -> float | None:
    """Euclidean norm of a (possibly composite, '|'-joined) numeric token."""
    total = 0.0
    for part in label.split("|"):
        try:
            v = float(part)
        except ValueError:
            return None
        total += v * v
    return math.sqrt(total)


def _pick_maxfreq(allowed: Iterable[str], global_counts) -> str:
    return min(allowed, key=lambda a: (-global_counts[a], a))


def _pick_minnorm(allowed: Iterable[str]) -> str:
    allowed = sorted(allowed)
    norms = [_token_norm(a) for a in allowed]
    if any(n is None for n in norms):
        return allowed[0]
    return min(zip(norms, allowed))[1]


def determinize_preprocess(controller: Controller, det: Determinizer) -> Controller:
    """Commit to one action per state before construction; the result is
    deterministic and pointwise a subset of the input."""
    if not det.is_preprocess:
        raise ValueError(f"{det.mode.value} is not a pre-processing determinizer")
    rng = random.Random(det.seed) if det.mode is DetMode.PRE_RANDOM else None
    rows: dict = {}
    counts = controller.global_action_counts
    for state in controller.states:
        allowed = controller.rows[state]
        if det.mode is DetMode.PRE_MAXFREQ:
            choice = _pick_maxfreq(allowed, counts)
        elif det.mode is DetMode.PRE_MINNORM:
            choice = _pick_minnorm(allowed)
        else:
            choice = rng.choice(sorted(allowed))
        rows[state] = frozenset({choice})
    return Controller(controller.variables, rows, permissive=False,
                      objective=controller.objective)

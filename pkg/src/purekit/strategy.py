"""Piecewise-constant mixed and pure strategies on a signal axis [0, 1].

A strategy is given by breakpoints ``0 = t_0 < t_1 < ... < t_C = 1``; cell 0
is ``[0, t_1]`` and cell c > 0 is ``(t_c, t_{c+1}]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ParameterError, ValidationError
from .measures import (ActionSpace, DenseNet, FiniteSupportMeasure, NetSearch,
                       prohorov_distance, validate_on)


def _check_partition(partition):
    t = np.array(partition, dtype=float).ravel()
    if t.size < 2 or t[0] != 0.0 or t[-1] != 1.0:
        raise ValidationError("partition must start at 0 and end at 1")
    if np.any(np.diff(t) <= 0):
        raise ValidationError("partition breakpoints must be strictly increasing")
    t.setflags(write=False)
    return t


def uniform_partition(cells):
    if cells < 1:
        raise ParameterError("need at least one cell")
    return np.linspace(0.0, 1.0, cells + 1)


def cell_of(partition, x):
    """Index of the cell containing each signal value."""
    x = np.asarray(x, dtype=float)
    return np.clip(np.searchsorted(partition, x, side="left") - 1, 0, len(partition) - 2)


def common_refinement(*partitions):
    t = np.unique(np.concatenate([np.asarray(p, dtype=float) for p in partitions]))
    # merge breakpoints that differ only by rounding
    keep = np.concatenate([[True], np.diff(t) > 1e-14])
    t = t[keep]
    t[-1] = 1.0
    return t


class MixedStrategy:
    """One finite-support measure per partition cell."""

    def __init__(self, partition, values, space=None):
        self.partition = _check_partition(partition)
        self.values = tuple(values)
        if len(self.values) != self.cells:
            raise ValidationError("one measure per partition cell is required")
        for v in self.values:
            if not isinstance(v, FiniteSupportMeasure):
                raise ValidationError("strategy values must be FiniteSupportMeasure")
        self.space = space
        if space is not None:
            for v in self.values:
                validate_on(v, space)

    @classmethod
    def constant(cls, measure, space=None):
        return cls([0.0, 1.0], [measure], space)

    @property
    def cells(self):
        return len(self.partition) - 1

    def __call__(self, x):
        return self.values[int(cell_of(self.partition, x))]

    def __eq__(self, other):
        return (isinstance(other, MixedStrategy)
                and np.array_equal(self.partition, other.partition)
                and self.values == other.values)

    def __repr__(self):
        return f"MixedStrategy(cells={self.cells})"

    def refine(self, partition):
        """The same map expressed on a finer partition."""
        t = _check_partition(partition)
        if not np.all(np.isin(self.partition, t)):
            raise ParameterError("target partition does not refine this one")
        mids = 0.5 * (t[:-1] + t[1:])
        idx = cell_of(self.partition, mids)
        return MixedStrategy(t, [self.values[i] for i in idx], self.space)

    def distinct_values(self):
        """(unique measures in first-occurrence order, cell -> value index)."""
        uniq, index, labels = [], {}, []
        for v in self.values:
            if v not in index:
                index[v] = len(uniq)
                uniq.append(v)
            labels.append(index[v])
        return uniq, np.array(labels)

    def support_points(self):
        return np.unique(np.concatenate([v.support.ravel() for v in self.values]))

    def to_json(self):
        return {"partition": self.partition.tolist(),
                "values": [v.to_json() for v in self.values]}

    @classmethod
    def from_json(cls, obj, space=None):
        return cls(obj["partition"], [FiniteSupportMeasure.from_json(v) for v in obj["values"]], space)


class PureStrategy:
    """One action per partition cell; the range is finite by construction."""

    def __init__(self, partition, actions, space=None):
        self.partition = _check_partition(partition)
        actions = np.array(actions, dtype=float).ravel()
        if actions.size != len(self.partition) - 1:
            raise ValidationError("one action per partition cell is required")
        if space is not None and not space.contains(actions):
            raise ValidationError("pure strategy action outside the action space")
        actions.setflags(write=False)
        self.actions = actions
        self.space = space

    @property
    def cells(self):
        return self.actions.size

    def __call__(self, x):
        return float(self.actions[int(cell_of(self.partition, x))])

    def __eq__(self, other):
        return (isinstance(other, PureStrategy)
                and np.array_equal(self.partition, other.partition)
                and np.array_equal(self.actions, other.actions))

    def __repr__(self):
        return f"PureStrategy(cells={self.cells}, range={self.range().tolist()})"

    def range(self):
        return np.unique(self.actions)

    def simplified(self):
        """Merge adjacent cells carrying the same action."""
        keep = np.concatenate([[True], self.actions[1:] != self.actions[:-1]])
        starts = self.partition[:-1][keep]
        return PureStrategy(np.append(starts, 1.0), self.actions[keep], self.space)

    def to_json(self):
        return {"partition": self.partition.tolist(), "actions": self.actions.tolist()}

    @classmethod
    def from_json(cls, obj, space=None):
        return cls(obj["partition"], obj["actions"], space)


def pure_to_mixed(p: PureStrategy) -> MixedStrategy:
    return MixedStrategy(p.partition, [FiniteSupportMeasure.dirac(a) for a in p.actions], p.space)


def as_mixed(s):
    return pure_to_mixed(s) if isinstance(s, PureStrategy) else s


@dataclass
class EvaluableStrategy:
    """Analytic strategy: a rule from signal value to a finite-support measure."""

    rule: Callable[[float], FiniteSupportMeasure]
    space: ActionSpace | None = None
    cells: int = 64


def to_piecewise(s: EvaluableStrategy, cells=None) -> MixedStrategy:
    """Sample the rule at cell midpoints of a uniform partition."""
    C = s.cells if cells is None else cells
    t = uniform_partition(C)
    values = []
    for x in 0.5 * (t[:-1] + t[1:]):
        v = s.rule(float(x))
        if not isinstance(v, FiniteSupportMeasure):
            raise ValidationError(f"rule returned {type(v).__name__} at x={x}")
        values.append(v)
    return MixedStrategy(t, values, s.space)


def cell_weights(s, Q):
    """Cell-averaged weights of a strategy on the uniform Q-cell fine grid.

    Returns ``(atoms, W)`` with ``W[q, a]`` the average probability of
    ``atoms[a]`` over fine cell q.  Rows of W sum to 1.
    """
    s = as_mixed(s)
    atoms = s.support_points()
    W = np.zeros((Q, atoms.size))
    fine = np.linspace(0.0, 1.0, Q + 1)
    t = s.partition
    lo = np.maximum(fine[:-1, None], t[None, :-1])
    hi = np.minimum(fine[1:, None], t[None, 1:])
    overlap = np.clip(hi - lo, 0.0, None) * Q          # (Q, C)
    for c, v in enumerate(s.values):
        cols = np.searchsorted(atoms, v.support.ravel())
        W[:, cols] += overlap[:, c:c + 1] * v.weights[None, :]
    W /= W.sum(axis=1, keepdims=True)
    return atoms, W


def is_aligned(s, Q):
    """Whether every breakpoint lies on the Q-cell fine grid."""
    t = np.asarray(s.partition) * Q
    return bool(np.all(np.abs(t - np.round(t)) < 1e-9))


class SimpleApproximator:
    """Lemma 1 approximation of a fixed strategy for growing net prefixes."""

    def __init__(self, f: MixedStrategy, net: DenseNet, tol=1e-9):
        self.f = f
        self.net = net
        self.uniq, self.labels = f.distinct_values()
        self.search = NetSearch(net, list(self.uniq), tol)

    def at(self, nu):
        if not 1 <= nu <= len(self.net):
            raise ParameterError(f"nu must lie in [1, {len(self.net)}]")
        best = [self.search.best_at(t, nu) for t in range(len(self.uniq))]
        values = [self.net[best[l][0]] for l in self.labels]
        sup = float(max(best[l][1] for l in self.labels))
        return MixedStrategy(self.f.partition, values, self.f.space), sup, [b[0] for b in best]


def simple_approximate(f: MixedStrategy, net: DenseNet, nu: int):
    """Cell-wise nearest net member among the first ``nu`` (min-index ties).

    Returns ``(f_nu, sup_distance)``.
    """
    g, sup, _ = SimpleApproximator(f, net).at(nu)
    return g, sup


def strategy_sup_distance(f, g, space=None, tol=1e-9):
    """Max over common cells of the Prohorov distance between cell values."""
    f, g = as_mixed(f), as_mixed(g)
    if f.space is not None and g.space is not None and f.space != g.space:
        raise TypeError("strategies live on different action spaces")
    space = space or f.space or g.space
    if space is None:
        raise ParameterError("an action space is needed to measure distances")
    t = common_refinement(f.partition, g.partition)
    mids = 0.5 * (t[:-1] + t[1:])
    cf, cg = cell_of(f.partition, mids), cell_of(g.partition, mids)
    cache = {}
    worst = 0.0
    for a, b in zip(cf, cg):
        key = (int(a), int(b))
        if key not in cache:
            P, Qm = f.values[a], g.values[b]
            cache[key] = 0.0 if P == Qm else prohorov_distance(P, Qm, space, tol)
        worst = max(worst, cache[key])
    return worst


def sample_actions(s, xs, rng):
    """Draw one action per signal from a strategy (for Monte Carlo checks)."""
    s = as_mixed(s)
    cells = cell_of(s.partition, xs)
    out = np.empty(len(xs))
    for c in np.unique(cells):
        sel = np.nonzero(cells == c)[0]
        v = s.values[c]
        out[sel] = rng.choice(v.support.ravel(), size=sel.size, p=v.weights)
    return out


def strategy_to_json(s):
    obj = s.to_json()
    obj["type"] = "pure" if isinstance(s, PureStrategy) else "mixed"
    return obj


def strategy_from_json(obj, space=None):
    if obj.get("type") == "pure" or "actions" in obj:
        return PureStrategy.from_json(obj, space)
    return MixedStrategy.from_json(obj, space)


def distinct_count(s):
    if isinstance(s, PureStrategy):
        return int(s.range().size)
    return len(s.distinct_values()[0])


def max_support(s):
    return max(len(v) for v in as_mixed(s).values)


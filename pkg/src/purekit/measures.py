"""Finite-support probability measures, the Prohorov metric and dense nets.

Every strategy in purekit is, after discretization, a map into finitely
supported measures, so this module is the common currency.  Prohorov
distances are computed through the Strassen coupling characterisation:
``rho(P, Q) <= eps`` iff some transport plan restricted to pairs at distance
``< eps`` moves at least ``1 - eps`` of the mass.  The transport question is a
max-flow problem on the bipartite support graph.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import ParameterError, SizeError, ValidationError

WEIGHT_TOL = 1e-12
_FLOW_EPS = 1e-15


class ActionSpace:
    """A compact metric space: a closed interval or a finite point set."""

    def __init__(self, kind, a=None, b=None, points=None, distances=None):
        self.kind = kind
        if kind == "interval":
            a, b = float(a), float(b)
            if not a < b:
                raise ValidationError(f"interval needs a < b, got [{a}, {b}]")
            self.a, self.b = a, b
            self.points = None
            self.distances = None
        elif kind == "finite":
            pts = np.asarray(points, dtype=float).ravel()
            if pts.size == 0:
                raise ValidationError("finite action space needs at least one point")
            if len(np.unique(pts)) != pts.size:
                raise ValidationError("finite action space points must be distinct")
            if distances is None:
                dist = np.abs(pts[:, None] - pts[None, :])
            else:
                dist = np.asarray(distances, dtype=float)
                _check_metric(dist, pts.size)
            self.points = pts
            self.distances = dist
            self.a, self.b = float(pts.min()), float(pts.max())
            self._order = np.argsort(pts)
        else:
            raise ValidationError(f"unknown action space kind {kind!r}")

    @classmethod
    def interval(cls, a=0.0, b=1.0):
        return cls("interval", a, b)

    @classmethod
    def finite(cls, points, distances=None):
        return cls("finite", points=points, distances=distances)

    @property
    def dim(self):
        return 1

    @property
    def diameter(self):
        if self.kind == "interval":
            return self.b - self.a
        return float(self.distances.max())

    def __eq__(self, other):
        if not isinstance(other, ActionSpace) or other.kind != self.kind:
            return False
        if self.kind == "interval":
            return (self.a, self.b) == (other.a, other.b)
        return (np.array_equal(self.points, other.points)
                and np.array_equal(self.distances, other.distances))

    def __hash__(self):
        return hash((self.kind, self.a, self.b))

    def __repr__(self):
        if self.kind == "interval":
            return f"ActionSpace.interval({self.a}, {self.b})"
        return f"ActionSpace.finite({self.points.tolist()})"

    def index_of(self, xs):
        """Indices of finite-space points; raises if a value is not a point."""
        xs = np.asarray(xs, dtype=float)
        sorted_pts = self.points[self._order]
        pos = np.clip(np.searchsorted(sorted_pts, xs), 0, sorted_pts.size - 1)
        if not np.all(sorted_pts[pos] == xs):
            raise ValidationError("value is not a point of the finite action space")
        return self._order[pos]

    def contains(self, xs):
        xs = np.asarray(xs, dtype=float)
        if self.kind == "interval":
            return bool(np.all((xs >= self.a) & (xs <= self.b)))
        try:
            self.index_of(xs)
        except ValidationError:
            return False
        return True

    def pairwise(self, xs, ys):
        xs = np.asarray(xs, dtype=float).ravel()
        ys = np.asarray(ys, dtype=float).ravel()
        if self.kind == "interval":
            return np.abs(xs[:, None] - ys[None, :])
        return self.distances[np.ix_(self.index_of(xs), self.index_of(ys))]

    def grid(self, step):
        """Points {a, a+step, ..., b}; all points for finite spaces."""
        if self.kind == "finite":
            return np.sort(self.points)
        n = max(1, math.ceil((self.b - self.a) / step - 1e-9))
        return np.linspace(self.a, self.b, n + 1)

    def sample(self, rng, size):
        if self.kind == "interval":
            return rng.uniform(self.a, self.b, size=size)
        return rng.choice(self.points, size=size)

    def to_json(self):
        if self.kind == "interval":
            return {"kind": "interval", "a": self.a, "b": self.b}
        return {"kind": "finite", "points": self.points.tolist(),
                "distances": self.distances.tolist()}

    @classmethod
    def from_json(cls, obj):
        if obj["kind"] == "interval":
            return cls.interval(obj["a"], obj["b"])
        return cls.finite(obj["points"], obj.get("distances"))


class ProductSpace:
    """Finite product of action spaces with the max metric."""

    def __init__(self, factors: Sequence[ActionSpace]):
        if not factors:
            raise ValidationError("product space needs at least one factor")
        self.factors = tuple(factors)

    @property
    def dim(self):
        return len(self.factors)

    @property
    def diameter(self):
        return max(f.diameter for f in self.factors)

    def __eq__(self, other):
        return isinstance(other, ProductSpace) and self.factors == other.factors

    def __hash__(self):
        return hash(self.factors)

    def _as_rows(self, xs):
        xs = np.asarray(xs, dtype=float)
        return xs.reshape(-1, self.dim)

    def contains(self, xs):
        xs = self._as_rows(xs)
        return all(f.contains(xs[:, c]) for c, f in enumerate(self.factors))

    def pairwise(self, xs, ys):
        xs, ys = self._as_rows(xs), self._as_rows(ys)
        out = np.zeros((len(xs), len(ys)))
        for c, f in enumerate(self.factors):
            out = np.maximum(out, f.pairwise(xs[:, c], ys[:, c]))
        return out


def _check_metric(dist, n):
    if dist.shape != (n, n):
        raise ValidationError(f"distance matrix must be {n}x{n}")
    if np.any(dist < 0) or not np.allclose(dist, dist.T, atol=0):
        raise ValidationError("distance matrix must be symmetric and nonnegative")
    if np.any(np.diag(dist) != 0):
        raise ValidationError("distance matrix must have zero diagonal")
    if n and np.any(dist[:, None, :] > dist[:, :, None] + dist[None, :, :] + 1e-12):
        raise ValidationError("distance matrix violates the triangle inequality")


@dataclass(frozen=True, eq=False)
class FiniteSupportMeasure:
    """Probability measure with finitely many atoms.

    ``support`` is a 1-D array of points, or 2-D (atoms x factors) for
    measures on a :class:`ProductSpace`.
    """

    support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        support = np.array(self.support, dtype=float)
        weights = np.array(self.weights, dtype=float).ravel()
        if support.ndim == 0:
            support = support.reshape(1)
        if support.shape[0] != weights.size:
            raise ValidationError("support and weights must have the same length")
        if weights.size == 0:
            raise ValidationError("a measure needs at least one atom")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise ValidationError("weights must be finite and nonnegative")
        if abs(weights.sum() - 1.0) > WEIGHT_TOL:
            raise ValidationError(f"weights sum to {weights.sum()!r}, not 1")
        rows = support.reshape(support.shape[0], -1)
        if len(np.unique(rows, axis=0)) != rows.shape[0]:
            raise ValidationError("support points must be distinct")
        support.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return self.weights.size

    def __eq__(self, other):
        return (isinstance(other, FiniteSupportMeasure)
                and np.array_equal(self.support, other.support)
                and np.array_equal(self.weights, other.weights))

    def __hash__(self):
        return hash((self.support.tobytes(), self.weights.tobytes()))

    def __repr__(self):
        return f"FiniteSupportMeasure({self.support.tolist()}, {self.weights.tolist()})"

    @classmethod
    def dirac(cls, x):
        x = np.asarray(x, dtype=float)
        return cls(x.reshape(1, -1) if x.ndim else x.reshape(1), [1.0])

    @classmethod
    def from_atoms(cls, points, weights):
        """Build a measure merging repeated points and dropping zero weights.

        Weights are renormalized, which absorbs rounding in mixtures.
        """
        pts = np.asarray(points, dtype=float)
        w = np.asarray(weights, dtype=float).ravel()
        keep = w > 0
        pts, w = pts[keep], w[keep]
        if w.size == 0:
            raise ValidationError("no atom has positive weight")
        rows = pts.reshape(pts.shape[0], -1)
        uniq, inverse = np.unique(rows, axis=0, return_inverse=True)
        merged = np.zeros(len(uniq))
        np.add.at(merged, inverse.ravel(), w)
        merged = merged / merged.sum()
        if pts.ndim == 1:
            uniq = uniq.ravel()
        return cls(uniq, merged)

    @property
    def is_dirac(self):
        return self.weights.size == 1 or int(np.count_nonzero(self.weights)) == 1

    def mean(self):
        return np.tensordot(self.weights, self.support, axes=1)

    def to_json(self):
        return {"support": self.support.tolist(), "weights": self.weights.tolist()}

    @classmethod
    def from_json(cls, obj):
        return cls(obj["support"], obj["weights"])


def mixture(measures, coefficients):
    """Convex combination of measures, atoms merged."""
    pts, ws = [], []
    for m, c in zip(measures, coefficients):
        if c <= 0:
            continue
        pts.append(m.support)
        ws.append(c * m.weights)
    return FiniteSupportMeasure.from_atoms(np.concatenate(pts), np.concatenate(ws))


def product_measure(measures):
    """Product of measures on the factors of a product space."""
    rows, ws = [], []
    for combo in itertools.product(*[range(len(m)) for m in measures]):
        rows.append([m.support[i] for m, i in zip(measures, combo)])
        ws.append(math.prod(m.weights[i] for m, i in zip(measures, combo)))
    return FiniteSupportMeasure.from_atoms(np.array(rows, dtype=float), np.array(ws))


def validate_on(P: FiniteSupportMeasure, space):
    if not space.contains(P.support):
        raise ValidationError(f"measure support {P.support.tolist()} not in {space!r}")


# ---------------------------------------------------------------------------
# Prohorov distance


class _TransportFlow:
    """Incremental max flow source -> P atoms -> Q atoms -> sink.

    Middle edges have infinite capacity and can only be added, so the flow
    value is monotone in the admitted edge set and never has to restart.
    """

    def __init__(self, p, q):
        self.p = np.asarray(p, dtype=float)
        self.q = np.asarray(q, dtype=float)
        n, m = self.p.size, self.q.size
        self.out = np.zeros(n)
        self.inn = np.zeros(m)
        self.flow = np.zeros((n, m))
        self.adj = [[] for _ in range(n)]
        self.radj = [[] for _ in range(m)]
        self.value = 0.0

    def add_edge(self, i, j):
        self.adj[i].append(j)
        self.radj[j].append(i)

    def augment(self):
        p, q, flow = self.p, self.q, self.flow
        while True:
            parent_y = {}
            parent_x = {}
            queue = deque(i for i in range(p.size) if p[i] - self.out[i] > _FLOW_EPS)
            seen_x = set(queue)
            found = None
            while queue and found is None:
                x = queue.popleft()
                for y in self.adj[x]:
                    if y in parent_y:
                        continue
                    parent_y[y] = x
                    if q[y] - self.inn[y] > _FLOW_EPS:
                        found = y
                        break
                    for x2 in self.radj[y]:
                        if x2 not in seen_x and flow[x2, y] > _FLOW_EPS:
                            seen_x.add(x2)
                            parent_x[x2] = y
                            queue.append(x2)
            if found is None:
                return self.value
            # walk back: y_k <- x_k (forward), x_k <- y_{k-1} (backward) ...
            path = []
            y = found
            bottleneck = q[y] - self.inn[y]
            while True:
                x = parent_y[y]
                path.append((x, y, +1))
                if x in parent_x:
                    y_prev = parent_x[x]
                    bottleneck = min(bottleneck, flow[x, y_prev])
                    path.append((x, y_prev, -1))
                    y = y_prev
                else:
                    bottleneck = min(bottleneck, p[x] - self.out[x])
                    break
            for x, y, sign in path:
                flow[x, y] += sign * bottleneck
            self.out[path[-1][0]] += bottleneck
            self.inn[found] += bottleneck
            self.value += bottleneck


def _check_pair(P, Q):
    for m in (P, Q):
        if abs(float(np.sum(m.weights)) - 1.0) > WEIGHT_TOL or np.any(m.weights < 0):
            raise ValidationError("invalid probability measure")


def coupling_feasible(P, Q, space, eps):
    """Strassen test: can mass >= 1 - eps be moved along pairs with d < eps?"""
    if eps >= 1.0:
        return True
    dist = space.pairwise(P.support, Q.support)
    flow = _TransportFlow(P.weights, Q.weights)
    for i, j in zip(*np.nonzero(dist < eps)):
        flow.add_edge(int(i), int(j))
    return flow.augment() >= 1.0 - eps - 1e-14


def _prohorov_exact(P, Q, space, cap=1.0):
    # Returns min(rho, cap); thresholds at or above cap are never examined.
    # On (e_t, e_{t+1}] the admitted edges are {d <= e_t}; the smallest feasible
    # eps in that piece is max(e_t, 1 - F_t).
    dist = space.pairwise(P.support, Q.support)
    levels = np.unique(dist)
    flow = _TransportFlow(P.weights, Q.weights)
    order = np.argsort(dist, axis=None, kind="stable")
    flat = dist.ravel()
    best = min(1.0, cap)
    pos = 0
    thresholds = levels if levels[0] == 0.0 else np.concatenate([[0.0], levels])
    for e in thresholds:
        if e >= best:
            break
        while pos < order.size and flat[order[pos]] <= e:
            i, j = divmod(int(order[pos]), dist.shape[1])
            flow.add_edge(i, j)
            pos += 1
        value = flow.augment()
        unmatched = 1.0 - value
        if unmatched < 1e-14:  # flow round-off on a full matching
            unmatched = 0.0
        best = min(best, max(float(e), unmatched))
    return float(max(best, 0.0))


def prohorov_distance(P, Q, space, tol=1e-9, method="auto"):
    """Prohorov distance between two finite-support measures.

    ``method='auto'`` uses the exact breakpoint sweep for supports of at most
    32 atoms and plain bisection on the coupling test otherwise.  The bisection
    result is the bracket midpoint, within ``tol/2`` of the true value.
    """
    if tol <= 0:
        raise ParameterError("tol must be positive")
    _check_pair(P, Q)
    if method == "auto":
        method = "exact" if max(len(P), len(Q)) <= 32 else "bisection"
    if method == "exact":
        return _prohorov_exact(P, Q, space)
    if method != "bisection":
        raise ParameterError(f"unknown method {method!r}")
    lo, hi = 0.0, max(1.0, space.diameter)
    if coupling_feasible(P, Q, space, tol / 4):
        hi = tol / 4
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if coupling_feasible(P, Q, space, mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _one_sided_oracle(P, Q, space):
    d = space.pairwise(P.support, Q.support)
    worst = 0.0
    n = len(P)
    for r in range(1, n + 1):
        for A in itertools.combinations(range(n), r):
            mass = float(P.weights[list(A)].sum())
            to_a = d[list(A), :].min(axis=0)
            # Q(A^eps) is a step function of eps: constant on (e_t, e_{t+1}].
            levels = np.unique(np.concatenate([[0.0], to_a]))
            eps_a = math.inf
            for e in levels:
                covered = float(Q.weights[to_a <= e].sum())
                eps_a = min(eps_a, max(float(e), mass - covered))
            worst = max(worst, eps_a)
    return worst


def prohorov_oracle(P, Q, space):
    """Exact Prohorov distance by enumerating all subsets of both supports.

    Independent of the flow code; only for tiny supports.
    """
    if len(P) + len(Q) > 16:
        raise SizeError("prohorov_oracle supports at most 16 atoms in total")
    _check_pair(P, Q)
    return min(1.0, max(_one_sided_oracle(P, Q, space), _one_sided_oracle(Q, P, space)))


# ---------------------------------------------------------------------------
# dense nets


def _compositions(total, parts):
    """Positive integer vectors of length ``parts`` summing to ``total``, lex order."""
    if parts == 1:
        yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


class DenseNet:
    """Measures on a finite grid with weights in {0, 1/r, ..., 1}.

    Members are enumerated lazily: by support size, then by the sorted grid
    index vector, then by the weight-count vector, each lexicographically.
    The order is deterministic and duplicate free; ``len`` is exact.
    """

    def __init__(self, space, grid, resolution):
        self.space = space
        self.grid = np.asarray(grid, dtype=float)
        self.resolution = int(resolution)
        self._members: list[FiniteSupportMeasure] = []
        self._codes: list[tuple] = []
        self._iter = self._generate()

    def __len__(self):
        return math.comb(self.grid.size + self.resolution - 1, self.resolution)

    def _generate(self) -> Iterator[tuple]:
        g, r = self.grid.size, self.resolution
        for size in range(1, min(g, r) + 1):
            for idx in itertools.combinations(range(g), size):
                for counts in _compositions(r, size):
                    yield idx, counts

    def _fill(self, upto):
        while len(self._codes) < upto:
            try:
                idx, counts = next(self._iter)
            except StopIteration:
                break
            self._codes.append((idx, counts))
            self._members.append(FiniteSupportMeasure(
                self.grid[list(idx)], np.array(counts, dtype=float) / self.resolution))

    def __getitem__(self, i):
        if i < 0 or i >= len(self):
            raise IndexError(i)
        self._fill(i + 1)
        return self._members[i]

    def code(self, i):
        """(grid indices, integer weight counts) of member ``i``."""
        self._fill(i + 1)
        return self._codes[i]

    def prefix(self, n):
        self._fill(n)
        return self._members[:n]

    def rank(self, P):
        """Index of ``P`` in the enumeration, or None if P is not a member."""
        g, r = self.grid.size, self.resolution
        pts = np.asarray(P.support, dtype=float).ravel()
        idx = np.searchsorted(self.grid, pts)
        if np.any(idx >= g) or not np.array_equal(self.grid[np.minimum(idx, g - 1)], pts):
            return None
        counts = np.asarray(P.weights) * r
        if not np.allclose(counts, np.round(counts), atol=1e-9, rtol=0):
            return None
        order = np.argsort(idx)
        idx = [int(i) for i in idx[order]]
        counts = [int(c) for c in np.round(counts)[order]]
        size = len(idx)
        pos = sum(math.comb(g, s) * math.comb(r - 1, s - 1) for s in range(1, size))
        # lexicographic rank of the index combination
        comb_rank, prev = 0, -1
        for t, i in enumerate(idx):
            for v in range(prev + 1, i):
                comb_rank += math.comb(g - v - 1, size - t - 1)
            prev = i
        # lexicographic rank of the composition
        comp_rank, left = 0, r
        for t, c in enumerate(counts[:-1]):
            parts = size - t
            for v in range(1, c):
                comp_rank += math.comb(left - v - 1, parts - 2)
            left -= c
        return pos + comb_rank * math.comb(r - 1, size - 1) + comp_rank

    @property
    def mesh_bound(self):
        step = float(np.max(np.diff(self.grid))) if self.grid.size > 1 else 0.0
        return step + 1.0 / self.resolution


def make_dense_net(space, grid_step, weight_resolution):
    if grid_step <= 0:
        raise ParameterError("grid_step must be positive")
    if weight_resolution < 1:
        raise ParameterError("weight_resolution must be at least 1")
    if space.kind == "interval" and grid_step > space.diameter:
        raise ParameterError("grid_step exceeds the diameter of the action space")
    return DenseNet(space, space.grid(grid_step), weight_resolution)


TIE_TOL = 1e-12  # distances closer than this count as ties (min index wins)


@dataclass
class NetSearch:
    """Incremental min-index nearest-member search over a growing net prefix.

    Records every improvement so the best member for any prefix length up to
    the scanned one can be recovered without rescanning.
    """

    net: DenseNet
    targets: list
    tol: float = 1e-9
    scanned: int = 0
    history: list = field(default_factory=list)

    def __post_init__(self):
        for P in self.targets:
            _check_pair(P, P)
        self.best = [(None, math.inf)] * len(self.targets)
        self.history = [[] for _ in self.targets]

    def extend(self, nu):
        nu = min(nu, len(self.net))
        members = self.net.prefix(nu)
        for j in range(self.scanned, nu):
            Q = members[j]
            for t, P in enumerate(self.targets):
                d = self._distance(P, Q, self.best[t][1])
                if d < self.best[t][1] - TIE_TOL:
                    self.best[t] = (j, d)
                    self.history[t].append((j, d))
        self.scanned = max(self.scanned, nu)

    def _distance(self, P, Q, cap):
        # capped sweep: a result equal to cap is never an improvement
        if max(len(P), len(Q)) <= 32 and cap < math.inf:
            # rho < cap needs the mass farther than cap from the other support below cap
            dist = self.net.space.pairwise(P.support, Q.support)
            if (P.weights[dist.min(axis=1) >= cap].sum() >= cap
                    or Q.weights[dist.min(axis=0) >= cap].sum() >= cap):
                return cap
            return _prohorov_exact(P, Q, self.net.space, cap)
        return prohorov_distance(P, Q, self.net.space, self.tol)

    def best_at(self, t, nu):
        """(index, distance) of the min-index nearest member among the first nu."""
        if nu > self.scanned:
            self.extend(nu)
        found = (None, math.inf)
        for j, d in self.history[t]:
            if j >= nu:
                break
            found = (j, d)
        return found

    def breakpoints(self):
        """Prefix lengths at which some target's best member changes."""
        return sorted({j + 1 for h in self.history for j, _ in h})


def nearest_in_net(P, net, nu):
    """Min-index member among the first ``nu`` minimizing the Prohorov distance."""
    if not 1 <= nu <= len(net):
        raise ParameterError(f"nu must lie in [1, {len(net)}]")
    search = NetSearch(net, [P])
    search.extend(nu)
    return search.best[0]

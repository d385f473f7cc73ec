"""Discretized two-player games: the input format of the purification engine.

Player 1 observes ``x`` on a fine grid of ``Qx`` cells; the opponent observes
one of ``Qy`` opaque cells (a flattened joint signal grid, or a disjoint union
of such grids when games are combined).  The opponent's action space is a
product of *factors*; each payoff coordinate depends on a subset of factors
and is nonzero only on a subset of Y cells (``columns``).

Opponent mixed strategies are product measures per Y cell: one weight matrix
``(Qy, B_f)`` per factor over a fixed atom array.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _util
from .game import fine_nodes
from .measures import ActionSpace, make_dense_net
from .strategy import cell_weights

MASS_TOL = 1e-10


@dataclass
class Coordinate:
    label: str
    depends: tuple
    columns: np.ndarray
    fn: Callable  # (k (A,), [ell_f (B_f,)]) -> (A, B_1..B_d, Qx, ncols)


@dataclass
class Opponent:
    atoms: tuple
    weights: tuple
    label: str = ""

    def refine(self, parent):
        return Opponent(self.atoms, tuple(w[parent] for w in self.weights), self.label)


class TwoPlayerGame:
    def __init__(self, mu, own_space, factors, coords, bound, y_blocks,
                 subdivision=None, rebuild=None, label=""):
        self.mu = np.asarray(mu, dtype=float)
        self.own_space = own_space
        self.factors = tuple(factors)
        self.coords = list(coords)
        self.bound = float(bound)
        self.y_blocks = [tuple(b) for b in y_blocks]
        self.subdivision = subdivision
        self._rebuild = rebuild
        self.label = label
        self.parts = None
        if abs(self.mu.sum() - 1.0) > MASS_TOL or np.any(self.mu < 0):
            raise ValueError("two-player prior must be a probability mass array")
        if sum(math.prod(b) for b in self.y_blocks) != self.Qy:
            raise ValueError("y_blocks do not match the number of Y cells")

    @property
    def Qx(self):
        return self.mu.shape[0]

    @property
    def Qy(self):
        return self.mu.shape[1]

    @property
    def m(self):
        return len(self.coords)

    def payoff(self, c, k, ells):
        coord = self.coords[c]
        out = np.asarray(coord.fn(np.asarray(k, dtype=float),
                                  [np.asarray(e, dtype=float) for e in ells]), dtype=float)
        want = (len(k),) + tuple(len(e) for e in ells) + (self.Qx, len(coord.columns))
        if out.shape != want:
            out = np.broadcast_to(out, want)
        return out

    def contract(self, c, T, F, weights):
        """Sum of mu * F * prod W * T for a payoff tensor from :meth:`payoff`."""
        coord = self.coords[c]
        d = len(coord.depends)
        a, x, y = 0, d + 1, d + 2
        ops = [T, [a] + list(range(1, d + 1)) + [x, y], self.mu[:, coord.columns], [x, y], F, [x, a]]
        for t, f in enumerate(coord.depends):
            ops += [weights[f][coord.columns], [y, t + 1]]
        return float(np.einsum(*ops, [], optimize=True))

    def values(self, F, atoms, opp):
        """U_c(f, g) for every coordinate; F is (Qx, len(atoms))."""
        out = np.empty(self.m)
        for c, coord in enumerate(self.coords):
            T = self.payoff(c, atoms, [opp.atoms[f] for f in coord.depends])
            out[c] = self.contract(c, T, F, opp.weights)
        return out

    def value_table(self, strategies, opps):
        """U_c(f_s, g_o) as an array (S, O, m); all opponents share atoms."""
        atoms = np.unique(np.concatenate([cell_weights(f, 1)[0] for f in strategies]))
        Fs = [embed_weights(*cell_weights(f, self.Qx), atoms) for f in strategies]
        out = np.zeros((len(strategies), len(opps), self.m))
        grids = opps[0].atoms
        for c, coord in enumerate(self.coords):
            T = self.payoff(c, atoms, [grids[f] for f in coord.depends])
            d = len(coord.depends)
            x, y = d + 1, d + 2
            TM = T * self.mu[:, coord.columns]
            for o, opp in enumerate(opps):
                ops = [TM, [0] + list(range(1, d + 1)) + [x, y]]
                for t, f in enumerate(coord.depends):
                    ops += [opp.weights[f][coord.columns], [y, t + 1]]
                A = np.einsum(*ops, [x, 0], optimize=True)
                for s_, F in enumerate(Fs):
                    out[s_, o, c] = float(np.sum(A * F))
        return out

    def strategy_values(self, f, opp):
        atoms, F = cell_weights(f, self.Qx)
        return self.values(F, atoms, opp)

    # -- derived games ------------------------------------------------------

    def _derived(self, coords, rebuild, label):
        g = TwoPlayerGame(self.mu, self.own_space, self.factors, coords, self.bound,
                          self.y_blocks, self.subdivision, rebuild, label)
        g.parts = self.parts
        return g

    def select(self, c):
        src = self
        return self._derived([self.coords[c]], lambda s: src.rebuild(s).select(c),
                             f"{self.label}[{self.coords[c].label}]")

    def nonneg(self):
        """Split every coordinate u into max(u, 0) and max(-u, 0)."""
        coords = []
        for sign, tag in ((1.0, "+"), (-1.0, "-")):
            for coord in self.coords:
                coords.append(Coordinate(f"{coord.label}{tag}", coord.depends, coord.columns,
                                         _clipped(coord.fn, sign)))
        src = self
        return self._derived(coords, lambda s: src.rebuild(s).nonneg(), f"{self.label}+-")

    def with_constant(self):
        Qx, Qy = self.Qx, self.Qy

        def one(k, ells):
            return np.ones((len(k), Qx, Qy))

        coords = self.coords + [Coordinate("one", (), np.arange(Qy), one)]
        src = self
        return self._derived(coords, lambda s: src.rebuild(s).with_constant(), f"{self.label}+1")

    def rebuild(self, subdivision):
        if subdivision == self.subdivision:
            return self
        if self._rebuild is None:
            raise ValueError("this game cannot be rebuilt at another subdivision")
        return self._rebuild(subdivision)

    def y_parent(self, finer):
        """Map each Y cell of a 2x refined game to its cell in this game."""
        out, off_c, off_f = [], 0, 0
        for shape, fshape in zip(self.y_blocks, finer.y_blocks):
            idx = np.indices(fshape).reshape(len(fshape), -1)
            ratio = [fs // s for fs, s in zip(fshape, shape)]
            coarse = np.ravel_multi_index(tuple(i // r for i, r in zip(idx, ratio)), shape)
            out.append(coarse + off_c)
            off_c += math.prod(shape)
            off_f += math.prod(fshape)
        return np.concatenate(out) if out else np.zeros(0, dtype=int)

    def x_ratio(self, finer):
        return finer.Qx // self.Qx


def embed_weights(atoms, W, target):
    """Re-express weights over ``atoms`` as weights over the superset ``target``."""
    out = np.zeros((W.shape[0], len(target)))
    out[:, np.searchsorted(target, atoms)] = W
    return out


def _clipped(fn, sign):
    def clipped(k, ells):
        return np.maximum(sign * np.asarray(fn(k, ells)), 0.0)
    return clipped


# ---------------------------------------------------------------------------
# constructors


def from_spec(spec, player, subdivision=2):
    """Player ``player`` against the aggregate of all other players.

    The opponent's factors are the other players' action spaces (in index
    order) and Y is the flattened joint fine grid of their signals.
    """
    n = spec.n
    if n < 2:
        raise ValueError("aggregation needs at least two players")
    Q = spec.prior.resolution * subdivision
    others = [j for j in range(n) if j != player]
    mass = np.moveaxis(spec.prior.fine_mass(subdivision), player, 0).reshape(Q, -1)
    nodes = [fine_nodes(Q)] * n

    def make(c):
        def fn(k, ells):
            atoms = [None] * n
            atoms[player] = k
            for f, j in enumerate(others):
                atoms[j] = ells[f]
            arr = spec.payoff_grid(c, atoms, nodes)
            arr = np.moveaxis(arr, [player, n + player], [0, n])
            return arr.reshape(arr.shape[:n] + (Q, -1))
        return fn

    coords = [Coordinate(f"u{c + 1}", tuple(range(n - 1)), np.arange(Q ** (n - 1)), make(c))
              for c in range(spec.m)]
    return TwoPlayerGame(mass, spec.spaces[player], [spec.spaces[j] for j in others], coords,
                         spec.bound, [(Q,) * (n - 1)], subdivision,
                         lambda s: from_spec(spec, player, s), f"player{player + 1}-vs-rest")


def opponent_from_profile(spec, player, strategies, subdivision):
    """Product-form opponent of :func:`from_spec` from the other players' strategies.

    ``strategies`` lists one strategy per player; entry ``player`` is ignored.
    """
    n = spec.n
    Q = spec.prior.resolution * subdivision
    others = [j for j in range(n) if j != player]
    grid = np.indices((Q,) * (n - 1)).reshape(n - 1, -1)
    atoms, weights = [], []
    for f, j in enumerate(others):
        a, W = cell_weights(strategies[j], Q)
        atoms.append(a)
        weights.append(W[grid[f]])
    return Opponent(tuple(atoms), tuple(weights), "profile")


def integrate_out(spec, m, j, h, subdivision=2):
    """The game between players m and j with all other players integrated out.

    Payoff coordinate i is the conditional expectation of u_i given (x_m, x_j)
    under the fixed strategies ``h`` of the remaining players; the prior is
    the pairwise marginal.  Returns ``(game, excluded_mass)`` where the
    excluded mass sits on pairwise cells of zero marginal (always 0 for mass
    arrays derived from a density).
    """
    n = spec.n
    Q = spec.prior.resolution * subdivision
    mass = spec.prior.fine_mass(subdivision)
    rest = [l for l in range(n) if l not in (m, j)]
    joint = mass.sum(axis=tuple(rest)) if rest else mass   # axes in index order
    pair = joint if m < j else joint.T                      # (Q_m, Q_j)
    pm_b = joint.reshape([Q if a in (m, j) else 1 for a in range(n)])
    with np.errstate(invalid="ignore", divide="ignore"):
        cond = np.where(pm_b > 0, mass / np.where(pm_b > 0, pm_b, 1.0), 0.0)
    excluded = float(mass[np.broadcast_to(pm_b <= 0, mass.shape)].sum())
    hw = {l: cell_weights(h[l], Q) for l in rest}
    nodes = [fine_nodes(Q)] * n

    def make(i):
        def fn(k, ells):
            atoms = [None] * n
            atoms[m], atoms[j] = k, ells[0]
            for l in rest:
                atoms[l] = hw[l][0]
            u = spec.payoff_grid(i, atoms, nodes)
            ops = [u, list(range(2 * n)), cond, list(range(n, 2 * n))]
            for l in rest:
                ops += [hw[l][1], [n + l, l]]
            return np.einsum(*ops, [m, j, n + m, n + j], optimize=True)
        return fn

    coords = [Coordinate(f"u{i + 1}", (0,), np.arange(Q), make(i)) for i in range(spec.m)]
    game = TwoPlayerGame(pair, spec.spaces[m], [spec.spaces[j]], coords, spec.bound, [(Q,)],
                         subdivision, lambda s: integrate_out(spec, m, j, h, s)[0],
                         f"G[{m + 1},{j + 1}]")
    return game, excluded


def combine(games):
    """Lemma-2 composite of two-player games sharing player 1's spaces.

    Every (game, coordinate) pair becomes one sub-game with its own copy of
    the opponent factors and its own Y block; the prior puts mass 1/M on each
    block and coordinate t vanishes off block t.
    """
    games = list(games)
    if not games:
        raise ValueError("need at least one game")
    Qx, space = games[0].Qx, games[0].own_space
    for g in games:
        if g.Qx != Qx or g.own_space != space:
            raise TypeError("combined games must share player 1's signal grid and action space")
    parts = [(g, c) for g in games for c in range(g.m)]
    M = len(parts)
    mus, factors, coords, blocks, offsets = [], [], [], [], []
    y_off = 0
    for t, (g, c) in enumerate(parts):
        coord = g.coords[c]
        f_off = len(factors)
        factors.extend(g.factors)
        mus.append(g.mu / M)
        coords.append(Coordinate(f"{g.label}:{coord.label}",
                                 tuple(f_off + f for f in coord.depends),
                                 y_off + np.asarray(coord.columns), coord.fn))
        blocks.extend(g.y_blocks)
        offsets.append((y_off, f_off))
        y_off += g.Qy
    sub = games[0].subdivision
    out = TwoPlayerGame(np.hstack(mus), space, factors, coords,
                        max(g.bound for g in games), blocks, sub,
                        lambda s: combine([g.rebuild(s) for g in games]), f"combined[{M}]")
    out.parts = {"games": parts, "offsets": offsets}
    return out


def lift_opponents(combined, opponents):
    """Composite opponent from one opponent per sub-game (anchored off-block)."""
    parts = combined.parts
    atoms, weights = [], []
    for t, ((g, c), (y_off, f_off)) in enumerate(zip(parts["games"], parts["offsets"])):
        opp = opponents[t]
        for f in range(len(g.factors)):
            W = np.repeat(opp.weights[f][:1], combined.Qy, axis=0)  # anchor: lowest cell
            W[y_off:y_off + g.Qy] = opp.weights[f]
            atoms.append(opp.atoms[f])
            weights.append(W)
    return Opponent(tuple(atoms), tuple(weights), "lifted")


# ---------------------------------------------------------------------------
# adversarial opponents


def suite_grids(game, points=21):
    grids = []
    for f in game.factors:
        if f.kind == "finite":
            grids.append(np.sort(f.points))
        else:
            grids.append(np.linspace(f.a, f.b, points))
    return grids


def adversarial_suite(game, size=128, seed=0, points=21, resolution=2):
    """Deterministic net-valued constant opponents plus seeded random ones.

    All members share the atom arrays from :func:`suite_grids`.
    """
    grids = suite_grids(game, points)
    Qy = game.Qy
    suite = []
    nets = [make_dense_net(f, _grid_step(g), resolution) if len(g) > 1 else None
            for f, g in zip(game.factors, grids)]
    n_const = size // 2
    for t in range(n_const):
        weights = []
        for g, net in zip(grids, nets):
            w = np.zeros(len(g))
            if net is None:
                w[0] = 1.0
            else:
                P = net[t % len(net)]
                w[np.searchsorted(g, P.support.ravel())] = P.weights
            weights.append(np.repeat(w[None, :], Qy, axis=0))
        suite.append(Opponent(tuple(grids), tuple(weights), f"net-constant-{t}"))
    t = 0
    while len(suite) < size:
        rng = _util.stream(seed, "suite", t)
        weights = []
        for g in grids:
            W = np.zeros((Qy, len(g)))
            for y in range(Qy):
                k = rng.integers(1, min(3, len(g)) + 1)
                idx = rng.choice(len(g), size=k, replace=False)
                W[y, idx] = rng.dirichlet(np.ones(k))
            weights.append(W)
        suite.append(Opponent(tuple(grids), tuple(weights), f"random-{t}"))
        t += 1
    return suite


def _grid_step(g):
    return float(np.max(np.diff(g))) if len(g) > 1 else 1.0


def gap_tables(game, F1, F2, atoms, suite):
    """U_c(f1, g) - U_c(f2, g) for every opponent in ``suite`` and coordinate c.

    Also returns, per coordinate, the payoff-difference field used to build
    worst-case grid opponents.
    """
    D = F1 - F2
    grids = suite[0].atoms
    out = np.zeros((len(suite), game.m))
    fields = []
    for c, coord in enumerate(game.coords):
        T = game.payoff(c, atoms, [grids[f] for f in coord.depends])
        d = len(coord.depends)
        mu = game.mu[:, coord.columns]
        A = np.einsum(T, [0] + list(range(1, d + 1)) + [d + 1, d + 2], mu, [d + 1, d + 2],
                      D, [d + 1, 0], list(range(1, d + 1)) + [d + 2], optimize=True)
        fields.append(A)
        for s, opp in enumerate(suite):
            ops = [A, list(range(d + 1))]
            for t, f in enumerate(coord.depends):
                ops += [opp.weights[f][coord.columns], [d, t]]
            out[s, c] = float(np.einsum(*ops, [], optimize=True))
    return out, fields


def worst_case_opponents(game, fields, grids):
    """Per coordinate and sign, the per-cell Dirac maximizing the gap on the grid."""
    opps = []
    for c, (coord, A) in enumerate(zip(game.coords, fields)):
        d = len(coord.depends)
        for sign in (1.0, -1.0):
            weights = [np.zeros((game.Qy, len(g))) for g in grids]
            for w in weights:
                w[:, 0] = 1.0
            if d:
                flat = (sign * A).reshape(-1, A.shape[-1])
                best = np.unravel_index(np.argmax(flat, axis=0), A.shape[:-1])
                for t, f in enumerate(coord.depends):
                    W = weights[f]
                    W[coord.columns, 0] = 0.0
                    W[coord.columns, best[t]] = 1.0
            opps.append(Opponent(tuple(grids), tuple(weights), f"worst-{coord.label}{'+-'[sign < 0]}"))
    return opps


def quadrature_budget(game, strategies, probes):
    """Change in U under doubling the subdivision, summed over ``strategies``.

    For each strategy, the largest |U_s - U_2s| over probe opponents and
    coordinates; the budget is the sum of these maxima.
    """
    finer = game.rebuild(2 * game.subdivision)
    parent = game.y_parent(finer)
    coarse = game.value_table(strategies, probes)
    fine = finer.value_table(strategies, [p.refine(parent) for p in probes])
    return float(np.abs(coarse - fine).max(axis=(1, 2)).sum())


def factor_grid(space: ActionSpace, points):
    if space.kind == "finite":
        return np.sort(space.points)
    return np.linspace(space.a, space.b, points)


def product_size(arrays):
    return math.prod(len(a) for a in arrays)


def product_grid(arrays):
    return np.array(list(itertools.product(*arrays)))


@dataclass
class SuiteSummary:
    size: int
    grid_points: int
    seed: int
    worst_case: int = 0
    labels: list = field(default_factory=list)

    def to_json(self):
        return {"size": self.size, "grid_points": self.grid_points, "seed": self.seed,
                "worst_case_members": self.worst_case}

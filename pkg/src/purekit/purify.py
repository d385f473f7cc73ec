"""Finite-range pure purification of a mixed strategy in a two-player game.

Pipeline (``theorem1_purify``):

1. pick the shortest net prefix whose cell-wise nearest-member approximation
   f'' of f moves every payoff coordinate by less than eps/2 against the worst
   opponent action on an action grid; K' is the union of the supports of f'';
2. choose delta so that opponent perturbations of Prohorov size < delta move
   payoffs by less than eps/6;
3. L' = grid of mesh delta/2 with the simplex net of resolution ceil(2/delta);
4. build the auxiliary measure nu from the nonnegative parts of the payoffs;
5. round every level set of f'' to vertices of the simplex over K' so the
   seminorm ||f'' - f'||_nu stays below the kappa budget;
6. verify against an adversarial opponent suite and record a certificate.

Everything runs on the discretized game of :mod:`purekit.twoplayer`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy import ndimage

from . import _util
from .errors import BudgetInfeasibleError, ParameterError, ValidationError
from .measures import DenseNet, FiniteSupportMeasure, make_dense_net
from .strategy import (MixedStrategy, PureStrategy, SimpleApproximator, as_mixed,
                       cell_of, cell_weights, is_aligned, uniform_partition)
from .twoplayer import (TwoPlayerGame, adversarial_suite, embed_weights, factor_grid,
                        gap_tables, quadrature_budget, suite_grids, worst_case_opponents)


@dataclass
class PurifyConfig:
    net_step: float = 0.05
    net_resolution: int = 20
    ell_points: int = 21
    margin: float = 0.1
    lipschitz: float | None = None
    grid_cap: int = 4097
    scheme: str = "stratified"
    max_retries: int = 64
    M_cap: int = 2 ** 20
    scan_cap: int = 200_000
    suite_size: int = 128
    suite_points: int = 21
    suite_resolution: int = 2
    quadrature_probes: int = 8
    aux_cache: int = 20_000_000

    def to_json(self):
        return asdict(self)

    @classmethod
    def from_json(cls, obj):
        return cls(**obj)


@dataclass
class StageBudget:
    """The eps split: eps/2 for Step 1, eps/6 for Step 2, the rest for rounding."""

    epsilon: float
    margin: float = 0.1
    quadrature: float = 0.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ParameterError("epsilon must be positive")
        if not 0 <= self.margin < 1:
            raise ParameterError("margin must lie in [0, 1)")

    @property
    def step1(self):
        return self.epsilon / 2 * (1 - self.margin)

    @property
    def step2(self):
        return self.epsilon / 6

    def accounting(self):
        e = Fraction(self.epsilon)
        # Step 7: eps/6 + eps/6 + eps/6 (perturb, round, perturb back) = eps/2
        rounding = e / 6 + e / 6 + e / 6
        assert rounding == e / 2 and e / 2 + rounding == e
        return {"step1": self.epsilon / 2, "step2": self.epsilon / 6,
                "rounding": self.epsilon / 6, "step7_total": self.epsilon / 2,
                "total": self.epsilon, "step1_margin": self.margin}


# ---------------------------------------------------------------------------
# Step 1


@dataclass
class Step1Result:
    simple: MixedStrategy
    nu: int
    gap: float
    gaps: list
    K_prime: np.ndarray
    sup_distance: float
    exact: bool
    target: float
    ell_points: int

    def to_json(self):
        return {"nu": self.nu, "gap": self.gap, "gaps": self.gaps, "target": self.target,
                "sup_distance": self.sup_distance, "exact_member": self.exact,
                "ell_points": self.ell_points, "certified_on": "ell grid"}


class _Step1Gap:
    """sum_xy mu * max_ell |sum_a (F - F'')[x, a] u(a, ell, x, y)| per coordinate."""

    def __init__(self, game, F, atoms, ell_points):
        self.game = game
        self.atoms = atoms
        self.F = F
        grids = [factor_grid(s, ell_points) for s in game.factors]
        self.tensors = []
        for c, coord in enumerate(game.coords):
            T = game.payoff(c, atoms, [grids[f] for f in coord.depends])
            self.tensors.append((T, game.mu[:, coord.columns], len(coord.depends)))

    def __call__(self, F2):
        D = self.F - F2
        out = []
        for T, mu, d in self.tensors:
            S = np.einsum(T, [0] + list(range(1, d + 3)), D, [d + 1, 0],
                          list(range(1, d + 3)), optimize=True)
            worst = np.abs(S).max(axis=tuple(range(d))) if d else np.abs(S)
            out.append(float(np.sum(mu * worst)))
        return out


def step1_select_simple(game: TwoPlayerGame, f: MixedStrategy, net: DenseNet, target: float,
                        ell_points=21, scan_cap=200_000, chunk=256):
    """Shortest net prefix whose approximation of ``f`` meets ``target``."""
    Qx = game.Qx
    atoms_f, Ff = cell_weights(f, Qx)
    atoms = np.union1d(atoms_f, net.grid)
    gap = _Step1Gap(game, embed_weights(atoms_f, Ff, atoms), atoms, ell_points)

    def evaluate(f2):
        a2, F2 = cell_weights(f2, Qx)
        return gap(embed_weights(a2, F2, atoms))

    approx = SimpleApproximator(f, net)
    ranks = [net.rank(v) for v in approx.uniq]
    if all(r is not None for r in ranks):
        # f is already net valued: f'' = f
        gaps = evaluate(f)
        return Step1Result(f, max(ranks) + 1, max(gaps), gaps, f.support_points(), 0.0, True,
                           target, ell_points)
    best = (math.inf, None)
    checked = 0
    limit = min(len(net), scan_cap)
    while True:
        upto = min(limit, max(chunk, 2 * approx.search.scanned))
        approx.search.extend(upto)
        for nu in [b for b in approx.search.breakpoints() if b > checked]:
            f2, sup, _ = approx.at(nu)
            gaps = evaluate(f2)
            if max(gaps) < best[0]:
                best = (max(gaps), nu)
            if max(gaps) < target:
                return Step1Result(f2, nu, max(gaps), gaps, f2.support_points(), sup, False,
                                   target, ell_points)
        checked = upto
        if upto >= limit:
            raise BudgetInfeasibleError(
                "step1", f"no prefix of the first {upto} net members reaches gap < {target}",
                best={"gap": best[0], "nu": best[1]})


# ---------------------------------------------------------------------------
# Step 2


@dataclass
class Step2Result:
    delta: float
    tested: float
    bound: float
    target: float
    method: str

    def to_json(self):
        return asdict(self)


def _window(space, spacing, delta, points):
    if space.kind == "finite":
        d = space.distances[space.distances > 0]
        return points if d.size and d.min() < delta else 1
    return max(1, math.ceil(delta / spacing - 1e-12))


def perturbation_bound(game, c, K, delta, grid_cap=4097):
    """Integrated bound on |int h dP - int h dQ| over pairs with rho(P, Q) < delta.

    With a Strassen coupling moving mass >= 1 - delta within distance delta,
    the difference is at most osc_delta(h) + delta * range(h), evaluated here
    on a grid of spacing delta/4 (coarser when capped), then maximized over
    k in K and integrated against mu.
    """
    coord = game.coords[c]
    deps = coord.depends
    if not deps:
        return 0.0
    cap = max(2, int(grid_cap ** (1.0 / len(deps))))
    grids, windows = [], []
    for f in deps:
        space = game.factors[f]
        if space.kind == "finite":
            g = np.sort(space.points)
            windows.append(_window(space, 0.0, delta, len(g)))
        else:
            npts = min(cap, math.ceil(space.diameter / (delta / 4) - 1e-9) + 1)
            npts = max(npts, 2)
            g = np.linspace(space.a, space.b, npts)
            windows.append(_window(space, g[1] - g[0], delta, npts))
        grids.append(g)
    T = game.payoff(c, K, grids)
    d = len(deps)
    size = [1] + windows + [1, 1]
    hi = ndimage.maximum_filter(T, size=size, mode="nearest")
    lo = ndimage.minimum_filter(T, size=size, mode="nearest")
    axes = tuple(range(1, d + 1))
    osc = (hi - lo).max(axis=axes)
    spread = T.max(axis=axes) - T.min(axis=axes)
    per = (osc + delta * spread).max(axis=0)
    return float(np.sum(game.mu[:, coord.columns] * per))


def step2_delta(game: TwoPlayerGame, K_prime, target, lipschitz=None, grid_cap=4097,
                max_halvings=40):
    """Largest dyadic delta whose perturbation bound is < target, halved."""
    K = np.asarray(K_prime, dtype=float)
    if K.size == 0:
        raise ParameterError("K' must be nonempty")
    if lipschitz is not None:
        B = game.bound
        delta = target / (lipschitz + 2 * B)
        return Step2Result(delta, delta, math.nan, target, "lipschitz")
    diam = max([f.diameter for f in game.factors] + [1.0])
    best = math.inf
    for t in range(1, max_halvings + 1):
        delta = diam * 2.0 ** -t
        bound = max(perturbation_bound(game, c, K, delta, grid_cap) for c in range(game.m))
        best = min(best, bound)
        if bound < target:
            return Step2Result(delta / 2, delta, bound, target, "grid-modulus")
    raise BudgetInfeasibleError("step2", f"no delta >= {delta} meets {target}", best=best)


# ---------------------------------------------------------------------------
# Step 3


@dataclass
class OpponentNet:
    grids: list
    resolution: int
    delta: float
    spaces: list

    @property
    def size(self):
        return math.prod(len(g) for g in self.grids)

    def net(self, f=0):
        return DenseNet(self.spaces[f], self.grids[f], self.resolution)

    def net_sizes(self):
        r = self.resolution
        return [math.comb(len(g) + r - 1, r) for g in self.grids]

    def member_near(self, P, f=0):
        """A net member within delta of ``P``: snap atoms, then round weights."""
        g = self.grids[f]
        space = self.spaces[f]
        d = space.pairwise(P.support.ravel(), g)
        idx = np.argmin(d, axis=1)
        w = np.zeros(len(g))
        np.add.at(w, idx, P.weights)
        r = self.resolution
        counts = np.floor(w * r).astype(int)
        rem = w * r - counts
        for i in np.argsort(-rem, kind="stable")[: r - counts.sum()]:
            counts[i] += 1
        keep = counts > 0
        return FiniteSupportMeasure(g[keep], counts[keep] / r)

    def to_json(self):
        return {"L_prime": [g.tolist() for g in self.grids], "weight_resolution": self.resolution,
                "delta": self.delta, "net_sizes": [str(n) for n in self.net_sizes()]}


def step3_opponent_net(spaces, delta):
    """Grid L' of mesh delta/2 per factor and the simplex net over it."""
    if delta <= 0:
        raise ParameterError("delta must be positive")
    if not isinstance(spaces, (list, tuple)):
        spaces = [spaces]
    grids = []
    for s in spaces:
        if delta >= s.diameter and s.diameter > 0:
            mid = np.array([0.5 * (s.a + s.b)]) if s.kind == "interval" else np.sort(s.points)[:1]
            grids.append(mid)
        elif s.kind == "finite":
            grids.append(np.sort(s.points))
        else:
            grids.append(s.grid(delta / 2))
    return OpponentNet(grids, math.ceil(2 / delta - 1e-12), delta, list(spaces))


# ---------------------------------------------------------------------------
# auxiliary measure


class AuxiliaryMeasure:
    """nu on X x Y' with Y' = (coordinate, k, ell, y), stored in blocks.

    Block b holds the joint mass array of shape (K', L'_dep..., Qx, ncols);
    the opponent factors a coordinate ignores contribute a multiplicity.
    """

    def __init__(self, game, K_prime, L_grids, cache_cap=20_000_000, _blocks=None):
        self.game = game
        self.K = np.asarray(K_prime, dtype=float)
        self.L = [np.asarray(g, dtype=float) for g in L_grids]
        self.constant_fix = False
        if _blocks is not None:
            self._cache = list(_blocks)
            self.c = 1.0
            self.Qx = self._cache[0].shape[-2]
            return
        self.Qx = game.Qx
        raw = sum(float(self._raw(i).sum()) for i in range(game.m))
        if raw <= 0:
            self.game = game = game.with_constant()
            self.constant_fix = True
            raw = sum(float(self._raw(i).sum()) for i in range(game.m))
        self.c = raw
        size = sum(self._block_size(i) for i in range(game.m))
        self._cache = [self._raw(i) / self.c for i in range(game.m)] if size <= cache_cap else None

    @classmethod
    def from_blocks(cls, blocks, K_prime):
        """Build directly from normalized joint mass blocks (..., Qx, ncols)."""
        blocks = [np.asarray(b, dtype=float) for b in blocks]
        return cls(None, K_prime, [], _blocks=blocks)

    @classmethod
    def uniform(cls, Qx, K_prime):
        """One Y' point whose conditional is uniform on [0, 1]."""
        return cls.from_blocks([np.full((Qx, 1), 1.0 / Qx)], K_prime)

    def _multiplicity(self, i):
        deps = self.game.coords[i].depends
        return math.prod(len(g) for f, g in enumerate(self.L) if f not in deps)

    def _block_size(self, i):
        coord = self.game.coords[i]
        return (len(self.K) * math.prod(len(self.L[f]) for f in coord.depends)
                * self.game.Qx * len(coord.columns))

    def _values(self, i):
        coord = self.game.coords[i]
        T = self.game.payoff(i, self.K, [self.L[f] for f in coord.depends])
        return np.maximum(T, 0.0)

    def _raw(self, i):
        coord = self.game.coords[i]
        return self._multiplicity(i) * self._values(i) * self.game.mu[:, coord.columns]

    def blocks(self):
        if self._cache is not None:
            yield from self._cache
        else:
            for i in range(self.game.m):
                yield self._raw(i) / self.c

    @property
    def coordinates(self):
        return len(self._cache) if self.game is None else self.game.m

    def total_mass(self):
        return math.fsum(float(b.sum()) for b in self.blocks())

    def marginal(self):
        """nu_{Y'} per block: mass of each (k, ell, y) index."""
        return [b.sum(axis=-2) for b in self.blocks()]

    def conditional(self, i):
        b = list(self.blocks())[i]
        w = b.sum(axis=-2, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(w > 0, b / np.where(w > 0, w, 1.0), 0.0)

    def coefficients(self, i):
        """(c_ikl(y), d_ikl(y)): conditional mean of v_i given y and its guarded reciprocal."""
        coord = self.game.coords[i]
        mu = self.game.mu[:, coord.columns]
        muY = mu.sum(axis=0)
        num = np.einsum("...xy,xy->...y", self._values(i), mu)
        with np.errstate(invalid="ignore", divide="ignore"):
            cc = np.where(muY > 0, num / np.where(muY > 0, muY, 1.0), 0.0)
            d = np.where(cc > 0, 1.0 / np.where(cc > 0, cc, 1.0), 0.0)
        return cc, d

    def seminorm(self, h):
        """sum over Y' of || sum_x nu(x, y') h(x) ||_2 (exact finite sums)."""
        h = np.asarray(h, dtype=float)
        if not np.any(h):
            return 0.0
        total = 0.0
        for b in self.blocks():
            v = np.einsum("...xy,xk->...yk", b, h, optimize=True)
            total += float(np.sqrt((v * v).sum(axis=-1)).sum())
        return total

    def step4_integral(self, mask, R):
        """int max_j nu(H_j | y') d nu_{Y'} for sub-cells of the fine cells in ``mask``."""
        total = 0.0
        for b in self.blocks():
            total += float(b[..., mask, :].max(axis=-2).sum()) / R if mask.any() else 0.0
        return total

    def to_json(self):
        return {"c": self.c, "total_mass": self.total_mass(), "constant_fix": self.constant_fix,
                "blocks": self.coordinates}


def build_auxiliary(game_v, K_prime, L_grids, cache_cap=20_000_000):
    return AuxiliaryMeasure(game_v, K_prime, L_grids, cache_cap)


def seminorm_nu(aux: AuxiliaryMeasure, h):
    return aux.seminorm(h)


# ---------------------------------------------------------------------------
# Steps 4-6: partitions and rounding


def make_partition(T, M):
    """H_j = T intersected with ((j-1)/M, j/M] (the first cell closed at 0).

    ``T`` is a list of disjoint intervals ``(lo, hi)`` read with the same
    convention; empty pieces are returned as None.
    """
    if M < 1:
        raise ParameterError("M must be at least 1")
    cells = []
    for j in range(1, M + 1):
        a, b = (j - 1) / M, j / M
        pieces = []
        for lo, hi in T:
            l, h = max(lo, a), min(hi, b)
            if h > l or (h == l and j == 1 and l == 0.0 and lo == 0.0):
                pieces.append((l, h))
        cells.append(pieces or None)
    return cells


@dataclass(frozen=True)
class SimplexPoint:
    """A point of the simplex over K' with rational weights numerators/denominator."""

    numerators: tuple
    denominator: int

    def __post_init__(self):
        if self.denominator < 1 or any(n < 0 for n in self.numerators):
            raise ValidationError("simplex point needs nonnegative numerators")
        if sum(self.numerators) != self.denominator:
            raise ValidationError("simplex point weights must sum to 1")

    @classmethod
    def from_weights(cls, weights, denominator):
        counts = np.round(np.asarray(weights, dtype=float) * denominator).astype(int)
        if not np.allclose(counts / denominator, weights, atol=1e-9):
            raise ValidationError("weights are not multiples of 1/denominator")
        return cls(tuple(int(c) for c in counts), int(denominator))

    @property
    def weights(self):
        return np.array(self.numerators, dtype=float) / self.denominator

    @property
    def is_vertex(self):
        return sum(1 for n in self.numerators if n) == 1


@dataclass(frozen=True)
class VertexPoint:
    index: int
    size: int

    @property
    def weights(self):
        w = np.zeros(self.size)
        w[self.index] = 1.0
        return w


@dataclass
class RoundingResult:
    sequences: np.ndarray   # (Qx, R) vertex indices, -1 outside T
    R: int
    seminorm: float
    attempts: int
    doublings: int
    scheme: str

    @property
    def M(self):
        return self.sequences.shape[0] * self.R


def _interleave(counts, offset):
    """Exact-count action sequence with the actions spread evenly, rotated."""
    keys, labels = [], []
    for k, n in enumerate(counts):
        keys.extend((i + 0.5) / n for i in range(n))
        labels.extend([k] * n)
    order = np.lexsort((np.array(labels), np.array(keys)))
    return np.roll(np.array(labels)[order], offset)


def _residual(sequences, mask, s, R):
    """Exact h = s - cell average of the rounded vertices, on cells in ``mask``."""
    K = len(s.numerators)
    h = np.zeros((sequences.shape[0], K))
    if not mask.any():
        return h
    rows = sequences[mask]
    counts = np.stack([(rows == k).sum(axis=1) for k in range(K)], axis=1)
    num = counts * s.denominator - np.array(s.numerators)[None, :] * R
    h[mask] = -num / (R * s.denominator)
    return h


def round_simplex(aux: AuxiliaryMeasure, T, s: SimplexPoint, kappa=None, R=1, seed=0,
                  stream_index=(0,), max_retries=64, scheme="independent", M_cap=2 ** 20):
    """Map the fine cells in ``T`` to vertices with cell averages near ``s``.

    ``T`` is a boolean mask over the Qx fine cells; every fine cell is split
    into R sub-cells (so M = Qx * R).  ``independent`` draws one vertex per
    sub-cell by inverse-CDF sampling from s; ``stratified`` places exactly
    s_k * R copies of vertex k in every fine cell (R a multiple of the
    denominator of s) in an interleaved order with a random rotation.
    ``kappa=None`` accepts the first draw.
    """
    T = np.asarray(T, dtype=bool)
    Qx = T.size
    K = len(s.numerators)
    if scheme not in ("independent", "stratified"):
        raise ParameterError(f"unknown rounding scheme {scheme!r}")
    if s.is_vertex:
        k = int(np.argmax(s.numerators))
        seq = np.where(T[:, None], k, -1) * np.ones((1, R), dtype=int)
        return RoundingResult(seq, R, 0.0, 1, 0, scheme)
    if scheme == "stratified":
        R = R * s.denominator // math.gcd(R, s.denominator)
    cum = np.cumsum(s.weights)
    cum[-1] = 1.0
    best = math.inf
    attempts = doublings = 0
    while True:
        if Qx * R > M_cap:
            raise BudgetInfeasibleError("step5", f"partition size exceeds the cap {M_cap}",
                                        best=best)
        for retry in range(max_retries):
            rng = _util.stream(seed, "round", *stream_index, doublings, retry)
            attempts += 1
            seq = np.full((Qx, R), -1, dtype=int)
            n_t = int(T.sum())
            if scheme == "independent":
                u = rng.random((n_t, R))
                seq[T] = np.minimum(np.searchsorted(cum, u, side="right"), K - 1)
            else:
                counts = [n * (R // s.denominator) for n in s.numerators]
                offsets = rng.integers(0, R, size=n_t)
                seq[T] = np.stack([_interleave(counts, int(o)) for o in offsets]) if n_t else seq[T]
            value = aux.seminorm(_residual(seq, T, s, R))
            best = min(best, value)
            if kappa is None or value < kappa:
                return RoundingResult(seq, R, value, attempts, doublings, scheme)
        R *= 2
        doublings += 1


@dataclass
class SimplePurification:
    pure: PureStrategy
    seminorm: float
    levels: list
    R: int
    attempts: int

    @property
    def M(self):
        return self.pure_cells

    def to_json(self):
        return {"seminorm": self.seminorm, "levels": self.levels, "R": self.R,
                "attempts": self.attempts}


def purify_simple(aux: AuxiliaryMeasure, f2: MixedStrategy, K_prime, kappa, resolution,
                  seed=0, scheme="stratified", max_retries=64, M_cap=2 ** 20):
    """Round each level set of the simple strategy ``f2`` with budget kappa/(2q)."""
    K = np.asarray(K_prime, dtype=float)
    Qx = aux.Qx
    if not is_aligned(f2, Qx):
        raise ParameterError("the simple strategy must be aligned with the fine grid")
    uniq, labels = f2.distinct_values()
    mids = (np.arange(Qx) + 0.5) / Qx
    fine_label = labels[cell_of(f2.partition, mids)]
    q = len(uniq)
    results, points = [], []
    for j, p in enumerate(uniq):
        w = np.zeros(len(K))
        w[np.searchsorted(K, p.support.ravel())] = p.weights
        s = SimplexPoint.from_weights(w, resolution)
        mask = fine_label == j
        res = round_simplex(aux, mask, s, kappa / (2 * q), 1, seed, (j,), max_retries, scheme, M_cap)
        results.append(res)
        points.append(s)
    R = 1
    for res in results:
        R = R * res.R // math.gcd(R, res.R)
    seq = np.full((Qx, R), -1, dtype=int)
    h = np.zeros((Qx, len(K)))
    for j, (res, s) in enumerate(zip(results, points)):
        mask = fine_label == j
        seq[mask] = np.repeat(res.sequences[mask], R // res.R, axis=1)
        h += _residual(res.sequences, mask, s, res.R)
    total = aux.seminorm(h)
    if total >= kappa:
        raise BudgetInfeasibleError("step6", f"seminorm {total} not below kappa {kappa}", best=total)
    pure = PureStrategy(uniform_partition(Qx * R), K[seq.ravel()]).simplified()
    levels = [{"value": p.to_json(), "R": res.R, "seminorm": res.seminorm,
               "attempts": res.attempts, "doublings": res.doublings}
              for p, res in zip(uniq, results)]
    return SimplePurification(pure, total, levels, R, sum(r.attempts for r in results))


# ---------------------------------------------------------------------------
# Step 8


class _PartPayoff:
    def __init__(self, base, sign):
        self.base = base
        self.sign = sign
        self.kind = "derived"

    def __call__(self, ks, xs):
        return np.maximum(self.sign * np.asarray(self.base(ks, xs)), 0.0)

    def check_domain(self, spaces):
        self.base.check_domain(spaces)

    def describe(self):
        return f"max({'' if self.sign > 0 else '-'}({self.base.describe()}), 0)"


def nonneg_decompose(g):
    """GameSpec with payoffs max(u_i, 0) followed by max(-u_i, 0)."""
    from .game import GameSpec

    parts = [_PartPayoff(p, 1.0) for p in g.payoffs] + [_PartPayoff(p, -1.0) for p in g.payoffs]
    return GameSpec(g.spaces, g.prior, parts, g.bound, usual=False, validate=False)


# ---------------------------------------------------------------------------
# the pipeline


@dataclass
class PurificationCertificate:
    epsilon: float
    seed: int
    status: str
    stage_bounds: dict
    K_prime: list
    L_prime: list
    delta: float
    M: int
    retries: int
    seminorm: float
    kappa: float
    adversarial_gaps: list
    quadrature_budget: float
    range_size: int
    suite: dict
    config: dict
    nu: int
    failures: list = field(default_factory=list)

    def to_json(self):
        return asdict(self)

    @property
    def passed(self):
        return self.status == "PASS"


def theorem1_purify(game: TwoPlayerGame, f: MixedStrategy, epsilon, seed=0, config=None,
                    suite=None):
    """Finite-range pure strategy eps-equivalent to ``f`` for player 1 of ``game``.

    Returns ``(pure, certificate)``.
    """
    cfg = config or PurifyConfig()
    seed = _util.check_seed(seed)
    budget = StageBudget(epsilon, cfg.margin)
    f = as_mixed(f)
    if not is_aligned(f, game.Qx):
        raise ParameterError(f"strategy breakpoints must lie on the {game.Qx}-cell fine grid")
    net = make_dense_net(game.own_space, cfg.net_step, cfg.net_resolution)
    s1 = step1_select_simple(game, f, net, budget.step1, cfg.ell_points, cfg.scan_cap)
    K = s1.K_prime
    s2 = step2_delta(game, K, budget.step2, cfg.lipschitz, cfg.grid_cap)
    s3 = step3_opponent_net(list(game.factors), s2.delta)
    aux = build_auxiliary(game.nonneg(), K, s3.grids, cfg.aux_cache)
    # the rounding gap of u is the sum of the gaps of its two nonnegative parts
    kappa_bound = epsilon / (6 * aux.c * len(K) * s3.size)
    kappa = kappa_bound / 2
    simple = purify_simple(aux, s1.simple, K, kappa, net.resolution, seed, cfg.scheme,
                           cfg.max_retries, cfg.M_cap)
    pure = simple.pure
    gaps, q_b, summary = verify_purification(game, f, pure, seed, cfg, suite)
    failures = []
    if not set(pure.range().tolist()) <= set(K.tolist()):
        failures.append("range not contained in K'")
    if simple.seminorm >= kappa:
        failures.append("seminorm over budget")
    if max(gaps) >= epsilon + q_b:
        failures.append("adversarial gap over budget")
    cert = PurificationCertificate(
        epsilon=epsilon, seed=seed, status="FAILED" if failures else "PASS",
        stage_bounds={"budget": budget.accounting(), "step1": s1.to_json(), "step2": s2.to_json(),
                      "step3": {k: v for k, v in s3.to_json().items() if k != "L_prime"},
                      "step7": {"c": aux.c, "total_mass": aux.total_mass(),
                                "constant_fix": aux.constant_fix, "kappa_bound": kappa_bound,
                                "kappa": kappa},
                      "rounding": simple.to_json()},
        K_prime=K.tolist(), L_prime=[g.tolist() for g in s3.grids], delta=s2.delta,
        M=game.Qx * simple.R, retries=simple.attempts, seminorm=simple.seminorm, kappa=kappa,
        adversarial_gaps=[float(g) for g in gaps], quadrature_budget=q_b,
        range_size=int(pure.range().size), suite=summary, config=cfg.to_json(), nu=s1.nu,
        failures=failures)
    return pure, cert


def verify_purification(game, f, pure, seed, cfg, suite=None):
    """Max |U_c(f, g) - U_c(pure, g)| over the adversarial suite, per coordinate.

    Returns ``(gaps, quadrature_budget, suite_summary)``.
    """
    if suite is None:
        suite = adversarial_suite(game, cfg.suite_size, seed, cfg.suite_points, cfg.suite_resolution)
    atoms_f, Ff = cell_weights(f, game.Qx)
    atoms_p, Fp = cell_weights(pure, game.Qx)
    atoms = np.union1d(atoms_f, atoms_p)
    F1, F2 = embed_weights(atoms_f, Ff, atoms), embed_weights(atoms_p, Fp, atoms)
    table, fields = gap_tables(game, F1, F2, atoms, suite)
    worst = worst_case_opponents(game, fields, list(suite[0].atoms))
    wtable, _ = gap_tables(game, F1, F2, atoms, worst)
    gaps = np.abs(np.vstack([table, wtable])).max(axis=0)
    probes = suite[: cfg.quadrature_probes] + worst[: cfg.quadrature_probes]
    q_b = quadrature_budget(game, [f, pure], probes)
    summary = {"members": len(suite) + len(worst), "random_and_net": len(suite),
               "worst_case": len(worst), "grid_points": cfg.suite_points, "seed": seed,
               "quadrature_probes": len(probes)}
    return gaps, q_b, summary

"""n-player reductions, recursive equilibrium purification and regret checks."""

from __future__ import annotations

import itertools
import logging
import warnings
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from . import _util
from .errors import ParameterError
from .game import (check_conditionally_atomless, expected_payoff,
                   expected_payoff_tensor)
from .measures import FiniteSupportMeasure
from .purify import PurifyConfig, theorem1_purify, verify_purification
from .strategy import MixedStrategy, cell_weights, uniform_partition
from .twoplayer import (combine, from_spec, integrate_out, lift_opponents,
                        opponent_from_profile)

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Theorem 2


def aggregate_opponents(g, i, subdivision=2):
    """Player i against one aggregate opponent holding all other players' actions."""
    if g.n < 2:
        raise ParameterError("nothing to aggregate in a one-player game")
    return from_spec(g, i, subdivision)


def profile_to_opponent(g, i, profile, subdivision=2):
    return opponent_from_profile(g, i, profile, subdivision)


def theorem2_purify(g, i, f_i, epsilon, seed=0, config=None, subdivision=2):
    """Purify player i's strategy in the aggregated two-player game."""
    report = check_conditionally_atomless(g.prior, i)
    if not report.passed:
        warnings.warn(f"prior is not conditionally atomless for player {i + 1}", stacklevel=2)
    game = aggregate_opponents(g, i, subdivision)
    return theorem1_purify(game, f_i, epsilon, seed, config)


# ---------------------------------------------------------------------------
# Lemma 2


def combine_games(games):
    return combine(games)


@dataclass
class Lemma2Certificate:
    epsilon: float
    subgames: int
    subgame_gaps: list
    subgame_quadrature: list
    composite: dict
    status: str

    def to_json(self):
        return asdict(self)


def lemma2_purify(games, f, epsilon, seed=0, config=None, verify=True):
    """One pure strategy eps-equivalent to ``f`` in every game of the family.

    Vector payoffs are flattened into one sub-game per coordinate; the
    composite is purified with budget eps / (number of sub-games).
    """
    cfg = config or PurifyConfig()
    combined = combine(games)
    M = len(combined.parts["games"])
    pure, cert = theorem1_purify(combined, f, epsilon / M, seed, cfg)
    gaps, quads = [], []
    if verify:
        for t, (g, c) in enumerate(combined.parts["games"]):
            sub = g.select(c)
            gap, q_b, _ = verify_purification(sub, f, pure, _util.check_seed(seed) ^ t, cfg)
            gaps.append(float(gap[0]))
            quads.append(q_b)
    ok = cert.passed and all(gp < epsilon + q for gp, q in zip(gaps, quads))
    return pure, Lemma2Certificate(epsilon, M, gaps, quads, cert.to_json(),
                                   "PASS" if ok else "FAILED")


# ---------------------------------------------------------------------------
# Theorem 3


def integrate_out_players(g, h, m, j, subdivision=2):
    """G^{mjh}: players m and j with everyone else integrated out under ``h``."""
    if m == j:
        raise ParameterError("m and j must differ")
    game, excluded = integrate_out(g, m, j, h, subdivision)
    if excluded > 0:
        log.warning("excluded %.3g prior mass with undefined conditionals", excluded)
    return game


def budget_schedule(epsilon, n):
    """Stage budgets eps/3^(n-m+1), m = 1..n, as exact fractions of eps."""
    e = Fraction(epsilon)
    sched = [e / 3 ** (n - m + 1) for m in range(1, n + 1)]
    for m in range(n - 1):
        assert sched[m] * 3 == sched[m + 1]
    assert sched[-1] * 3 == e
    return sched


def epsilon_nash_check(g, profile, grids=None, subdivision=2, points=21):
    """Per-player regret against the best per-fine-cell deviation on a grid.

    Returns a list of regrets U_i(best deviation, f_-i) - U_i(f).
    """
    if not g.usual:
        raise ParameterError("regret needs a usual game")
    n = g.n
    Q = g.prior.resolution * subdivision
    if grids is None:
        grids = [_default_grid(s, points) for s in g.spaces]
    cw = [cell_weights(s, Q) for s in profile]
    regrets = []
    for i in range(n):
        atoms = [a for a, _ in cw]
        weights = [W for _, W in cw]
        atoms[i] = np.asarray(grids[i], dtype=float)
        V = expected_payoff_tensor(g, i, weights, atoms, subdivision, keep=i)
        best = float(V.max(axis=0).sum())
        regrets.append(best - expected_payoff(g, profile, i, subdivision))
    return regrets


def _default_grid(space, points):
    if space.kind == "finite":
        return np.sort(space.points)
    return np.linspace(space.a, space.b, points)


@dataclass
class NashCertificate:
    epsilon: float
    budget_schedule: list
    profiles: list
    equilibrium_input_regret: float
    input_regrets: list
    seeds: list
    status: str
    stages: list
    deviation_grid_points: list
    quadrature_budget: float
    diagnostics: list
    telescoping: bool = True
    failures: list = field(default_factory=list)

    def to_json(self):
        return asdict(self)

    @property
    def passed(self):
        return self.status == "PASS"


def theorem3_purify_equilibrium(g, f, epsilon, seed=0, config=None, subdivision=2,
                                grids=None, points=21):
    """Purify every player of the profile ``f`` in turn (players 1..n).

    Stage m purifies player m simultaneously in all games G^{mjh}, j != m,
    h in H_m, with budget eps/3^(n-m+1).  The certificate checks every
    profile that mixes original and purified strategies.
    """
    cfg = config or PurifyConfig()
    seed = _util.check_seed(seed)
    n = g.n
    sched = budget_schedule(epsilon, n)
    diagnostics = []
    for i in range(n):
        rep = check_conditionally_atomless(g.prior, i)
        diagnostics.append(rep.to_json())
        if not rep.passed:
            warnings.warn(f"prior fails the atomless diagnostic for player {i + 1}", stacklevel=2)
    if grids is None:
        grids = [_default_grid(s, points) for s in g.spaces]
    purified = [None] * n
    stages, seeds = [], []
    for m in range(n):
        eps_m = float(sched[m])
        stage_seed = int(_util.stream(seed, "theorem3", m).integers(0, 2 ** 63))
        seeds.append(stage_seed)
        games, labels = [], []
        for mask in itertools.product((0, 1), repeat=m):
            h = [purified[l] if l < m and mask[l] else f[l] for l in range(n)]
            for j in range(n):
                if j != m:
                    games.append(integrate_out_players(g, h, m, j, subdivision))
                    labels.append({"mask": list(mask), "j": j})
        pure, lcert = lemma2_purify(games, f[m], eps_m, stage_seed, cfg)
        purified[m] = pure
        comp = lcert.composite
        stages.append({"player": m, "budget": eps_m, "games": labels, "subgames": lcert.subgames,
                       "max_subgame_gap": max(lcert.subgame_gaps),
                       "range": pure.range().tolist(), "status": lcert.status,
                       "composite_status": comp["status"], "delta": comp["delta"],
                       "seminorm": comp["seminorm"], "kappa": comp["kappa"], "M": comp["M"],
                       "K_prime": comp["K_prime"]})
    base = [expected_payoff(g, f, i, subdivision) for i in range(n)]
    r_in = epsilon_nash_check(g, f, grids, subdivision)
    r0 = max(r_in)
    profiles, q_b = [], 0.0
    fine_base = [expected_payoff(g, f, i, 2 * subdivision) for i in range(n)]
    failures = []
    for mask in itertools.product((0, 1), repeat=n):
        h = [purified[l] if mask[l] else f[l] for l in range(n)]
        regrets = epsilon_nash_check(g, h, grids, subdivision)
        vals = [expected_payoff(g, h, i, subdivision) for i in range(n)]
        dev = max(abs(a - b) for a, b in zip(vals, base))
        fine = [expected_payoff(g, h, i, 2 * subdivision) for i in range(n)]
        q_b = max(q_b, max(abs(a - b) for a, b in zip(vals, fine))
                  + max(abs(a - b) for a, b in zip(base, fine_base)))
        profiles.append({"mask": list(mask), "regrets": regrets, "payoff_deviation": dev,
                         "payoffs": vals})
    for p in profiles:
        if max(p["regrets"]) >= epsilon + r0:
            failures.append(f"profile {p['mask']}: regret over eps + r0")
        if p["payoff_deviation"] >= epsilon + q_b:
            failures.append(f"profile {p['mask']}: payoff deviation over eps")
    if any(s["status"] != "PASS" for s in stages):
        failures.append("a purification stage failed")
    cert = NashCertificate(
        epsilon=epsilon, budget_schedule=[float(s) for s in sched], profiles=profiles,
        equilibrium_input_regret=r0, input_regrets=r_in, seeds=[seed] + seeds,
        status="FAILED" if failures else "PASS", stages=stages,
        deviation_grid_points=[len(gr) for gr in grids], quadrature_budget=q_b,
        diagnostics=diagnostics, failures=failures)
    return purified, cert


# ---------------------------------------------------------------------------
# equilibrium finder


def round_weights(P, r):
    """Largest-remainder rounding of each row to multiples of 1/r."""
    scaled = P * r
    counts = np.floor(scaled + 1e-12).astype(int)
    rem = scaled - counts
    short = r - counts.sum(axis=1)
    for row in range(P.shape[0]):
        order = np.argsort(-rem[row], kind="stable")[: short[row]]
        counts[row, order] += 1
    return counts / r


def _profile(grids, P, cells):
    t = uniform_partition(cells)
    out = []
    for grid, W in zip(grids, P):
        vals = []
        for row in W:
            keep = row > 0
            vals.append(FiniteSupportMeasure(grid[keep], row[keep]))
        out.append(MixedStrategy(t, vals))
    return out


@dataclass
class FinderResult:
    profile: list
    regret: float
    regrets: list
    iteration: int
    iterations: int

    def to_json(self):
        return {"regret": self.regret, "regrets": self.regrets, "iteration": self.iteration,
                "iterations": self.iterations,
                "profile": [s.to_json() for s in self.profile]}


def find_equilibrium_discretized(g, grids=None, cells=None, iterations=500, damping=1.0,
                                 subdivision=2, resolution=20, points=21):
    """Damped fictitious play over cell-wise mixed strategies on action grids.

    Step sizes are (t+2)^-damping.  Strategies are rounded to weights in
    multiples of 1/resolution before their regret is measured; the rounded
    profile with the smallest max-regret is returned.
    """
    n = g.n
    Q = g.prior.resolution * subdivision
    cells = Q if cells is None else cells
    if Q % cells:
        raise ParameterError(f"strategy cells ({cells}) must divide the fine grid ({Q})")
    if grids is None:
        grids = [_default_grid(s, points) for s in g.spaces]
    grids = [np.asarray(gr, dtype=float) for gr in grids]
    rep = Q // cells
    P = [np.full((cells, len(gr)), 1.0 / len(gr)) for gr in grids]

    def values(weights):
        fine = [np.repeat(W, rep, axis=0) for W in weights]
        out = []
        for i in range(n):
            V = expected_payoff_tensor(g, i, fine, grids, subdivision, keep=i)
            out.append(V.reshape(len(grids[i]), cells, rep).sum(axis=2))
        return out

    best = None
    for t in range(iterations):
        R = [round_weights(W, resolution) for W in P]
        VR = values(R)
        regrets = [float(V.max(axis=0).sum() - np.sum(V * W.T)) for V, W in zip(VR, R)]
        if best is None or max(regrets) < best[0]:
            best = (max(regrets), regrets, R, t)
        V = values(P)
        alpha = (t + 2.0) ** -damping
        for i in range(n):
            br = np.zeros_like(P[i])
            br[np.arange(cells), np.argmax(V[i], axis=0)] = 1.0
            P[i] = (1 - alpha) * P[i] + alpha * br
    reg, regrets, R, it = best
    return FinderResult(_profile(grids, R, cells), reg, regrets, it, iterations)

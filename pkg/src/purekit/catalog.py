"""Built-in games, written in the game-spec text format.

cournot
    u_i = k_i * max(0, a(x) - sum_j k_j) - c_i * k_i with demand intercept
    a(x) = 1.2 + 0.4 * mean(x); correlated 4x4 grid prior.
zero-sum-signal (two players)
    u_1 = (k_1 - k_2)^2 * (0.5 + x_1 x_2), u_2 = -u_1.  Equilibrium:
    player 1 mixes 1/2 on each endpoint, player 2 plays 1/2.
quadratic-coordination
    u_i = 1 - (k_i - (0.3 x_i + 0.5 * mean_{j != i} k_j + 0.1))^2.
dominant-action
    u_i = 1 - (k_i - 1/2)^2 + 0.2 x_i mean_{j != i} k_j; 1/2 is strictly
    dominant, so the equilibrium is pure and net valued.
"""

from __future__ import annotations

import itertools

import numpy as np

from .errors import ParameterError
from .game import parse_game_spec
from .measures import FiniteSupportMeasure
from .strategy import EvaluableStrategy, to_piecewise

NAMES = ("cournot", "quadratic-coordination", "zero-sum-signal", "dominant-action")
COURNOT_COSTS = (0.1, 0.15, 0.2, 0.25)


def _correlated_density(n, G=4, rho=0.6):
    mids = (np.arange(G) + 0.5) / G
    dens = np.ones((G,) * n)
    pairs = list(itertools.combinations(range(n), 2))
    for idx in itertools.product(range(G), repeat=n):
        z = [2 * mids[i] - 1 for i in idx]
        dens[idx] = 1 + rho * sum(z[a] * z[b] for a, b in pairs) / len(pairs)
    return dens / dens.mean()


def _prior_block(dens):
    G = dens.shape[0]
    vals = dens.ravel(order="F")  # axis 1 fastest
    rows = [" ".join(f"{v:.17g}" for v in vals[i:i + G]) for i in range(0, vals.size, G)]
    return "[prior]\nkind=grid resolution=%d\n%s\n" % (G, "\n".join(rows))


def _others_mean(i, n):
    others = [f"k{j + 1}" for j in range(n) if j != i]
    return f"({'+'.join(others)})/{len(others)}"


def catalog_text(name, players=None):
    """Game-spec text of a catalog game."""
    if name not in NAMES:
        raise ParameterError(f"unknown catalog game {name!r}; choose from {', '.join(NAMES)}")
    n = 2 if players is None else int(players)
    if name == "zero-sum-signal" and n != 2:
        raise ParameterError("zero-sum-signal is a two-player game")
    if not 2 <= n <= 4:
        raise ParameterError("catalog games support 2 to 4 players")
    head = f"# catalog game: {name}\n[game]\nplayers={n} payoffs={n} usual=true bound=%s\n"
    actions = "".join(f"[action.{i + 1}]\nkind=interval 0 1\n" for i in range(n))
    payoffs = []
    if name == "cournot":
        bound = 1
        xs = "+".join(f"x{i + 1}" for i in range(n))
        ks = "+".join(f"k{i + 1}" for i in range(n))
        prior = _prior_block(_correlated_density(n))
        for i in range(n):
            payoffs.append(f"k{i + 1}*max(0, 1.2 + 0.4*({xs})/{n} - ({ks})) - {COURNOT_COSTS[i]}*k{i + 1}")
    elif name == "zero-sum-signal":
        bound = 1.5
        prior = _prior_block(_correlated_density(2, G=2, rho=0.4))
        payoffs = ["(k1-k2)^2*(0.5 + x1*x2)", "-(k1-k2)^2*(0.5 + x1*x2)"]
    elif name == "quadratic-coordination":
        bound = 1
        prior = _prior_block(_correlated_density(n, G=2, rho=0.5))
        for i in range(n):
            payoffs.append(f"1 - (k{i + 1} - (0.3*x{i + 1} + 0.5*{_others_mean(i, n)} + 0.1))^2")
    else:
        bound = 1.2
        prior = "[prior]\nkind=uniform\n"
        for i in range(n):
            payoffs.append(f"1 - (k{i + 1} - 0.5)^2 + 0.2*x{i + 1}*{_others_mean(i, n)}")
    body = "".join(f"[payoff.{i + 1}]\nexpr={p}\n" for i, p in enumerate(payoffs))
    return head % bound + actions + prior + body


def catalog_game(name, players=None):
    return parse_game_spec(catalog_text(name, players), strict=True)


def _two_atom(lo, hi, w):
    if abs(lo - hi) < 1e-12:
        return FiniteSupportMeasure.dirac(lo)
    return FiniteSupportMeasure([lo, hi], [w, 1 - w])


_RULES = {
    "cournot": lambda i: (lambda x: _two_atom(0.15 + 0.2 * x + 0.02 * i, 0.45 + 0.15 * x, 0.35 + 0.3 * x)),
    "zero-sum-signal": lambda i: (
        (lambda x: _two_atom(0.03 + 0.1 * x, 0.97 - 0.1 * x, 0.45 + 0.1 * x)) if i == 0
        else (lambda x: _two_atom(0.42 + 0.1 * x, 0.58 - 0.05 * x, 0.5))),
    "quadratic-coordination": lambda i: (lambda x: _two_atom(0.2 + 0.3 * x, 0.55 + 0.2 * x, 0.6 - 0.2 * x)),
    "dominant-action": lambda i: (lambda x: _two_atom(0.3 + 0.1 * x, 0.62 + 0.05 * x, 0.5)),
}


def reference_strategy(name, player, cells):
    """A two-atom mixed strategy for ``player`` sampled on ``cells`` uniform cells."""
    if name not in _RULES:
        raise ParameterError(f"unknown catalog game {name!r}")
    return to_piecewise(EvaluableStrategy(_RULES[name](player)), cells)


def reference_family(name, player, cells, count, seed=0):
    """``count`` perturbed two-atom strategies (deterministic in ``seed``)."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        a, b = np.sort(rng.uniform(0, 1, 2))
        sa, sb = rng.uniform(-0.2, 0.2, 2)
        w0, w1 = rng.uniform(0.1, 0.9, 2)

        def rule(x, a=a, b=b, sa=sa, sb=sb, w0=w0, w1=w1):
            lo = float(np.clip(a + sa * x, 0, 1))
            hi = float(np.clip(b + sb * x, 0, 1))
            return _two_atom(min(lo, hi), max(lo, hi), w0 + (w1 - w0) * x)

        out.append(to_piecewise(EvaluableStrategy(rule), cells))
    return out


def describe(name):
    doc = {
        "cournot": "Cournot competition with signal-dependent demand, correlated grid prior",
        "zero-sum-signal": "two-player zero-sum spread game scaled by the signals",
        "quadratic-coordination": "quadratic best-response coordination, correlated prior",
        "dominant-action": "strictly dominant action 1/2 plus a small signal interaction",
    }
    return doc[name]

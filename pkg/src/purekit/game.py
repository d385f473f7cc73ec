"""Bayesian games on [0,1]^n signal spaces.

Player and payoff indices are 0-based in the Python API; the game-spec text
format and the CLI use the 1-based names ``k1``, ``u1``, ``[action.1]``.

Discretized payoffs
-------------------
The prior is a piecewise-constant density on a G^n cell grid.  Expected
payoffs are evaluated on the *fine grid* obtained by splitting every prior
cell into ``s`` equal pieces per axis (``Q = G*s`` cells per axis).  On each
fine cell the payoff is frozen at the cell midpoint and a strategy is replaced
by its length-weighted average over the cell, which is a finite mixture.  For
strategies whose breakpoints are fine-grid aligned this is the plain midpoint
rule; in general it is the exact integral of the midpoint-frozen payoff.
"""

from __future__ import annotations

import json
import math
import os
import re
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from . import expr as ex
from .errors import (ConditionalUndefinedError, ParameterError, ParseError,
                     ValidationError)
from .measures import ActionSpace

MASS_TOL = 1e-10


class SignalPrior:
    """Piecewise-constant density on the uniform cell grid of [0,1]^n."""

    def __init__(self, density, strict=True):
        density = np.array(density, dtype=float)
        if density.ndim == 0 or len(set(density.shape)) != 1:
            raise ValidationError("prior density must be a G x ... x G array")
        if np.any(density < 0) or not np.all(np.isfinite(density)):
            raise ValidationError("prior density must be finite and nonnegative")
        total = density.sum() / density.size
        if total <= 0:
            raise ValidationError("prior density has zero mass")
        if abs(total - 1.0) > MASS_TOL:
            if strict:
                raise ValidationError(f"prior density integrates to {total!r}, not 1")
            warnings.warn(f"prior density integrates to {total!r}; normalizing", stacklevel=2)
            density = density / total
        density.setflags(write=False)
        self.density = density

    @classmethod
    def uniform(cls, n, resolution=1):
        return cls(np.ones((resolution,) * n))

    @property
    def n(self):
        return self.density.ndim

    @property
    def resolution(self):
        return self.density.shape[0]

    def cell_mass(self):
        return self.density / self.density.size

    def fine_mass(self, subdivision):
        """Mass of each cell of the fine grid, shape ``(G*s,)*n``."""
        mass = self.density
        for ax in range(self.n):
            mass = np.repeat(mass, subdivision, axis=ax)
        return mass / mass.size

    def marginal(self, axes):
        """Marginal prior on ``axes`` (kept in the given order)."""
        axes = list(axes)
        drop = tuple(a for a in range(self.n) if a not in axes)
        dens = self.density.mean(axis=drop) if drop else self.density
        kept = sorted(axes)
        return SignalPrior(np.moveaxis(dens, [kept.index(a) for a in axes], range(len(axes))))

    def cell_index(self, value):
        # cells are [0, 1/G], (1/G, 2/G], ...
        if not 0.0 <= value <= 1.0:
            raise ParameterError(f"signal value {value} outside [0, 1]")
        G = self.resolution
        return max(0, math.ceil(value * G) - 1)

    def sample(self, rng, size):
        G, n = self.resolution, self.n
        flat = self.cell_mass().ravel()
        cells = rng.choice(flat.size, size=size, p=flat / flat.sum())
        idx = np.array(np.unravel_index(cells, self.density.shape)).T
        return (idx + rng.random((size, n))) / G

    def __eq__(self, other):
        return isinstance(other, SignalPrior) and np.array_equal(self.density, other.density)

    def __hash__(self):
        return hash(self.density.tobytes())


def conditional_prior(prior, fixed):
    """Conditional density of the free axes given ``fixed`` = {axis: value}."""
    index = [slice(None)] * prior.n
    for axis, value in fixed.items():
        index[axis] = prior.cell_index(value)
    slab = prior.density[tuple(index)]
    if slab.ndim == 0:
        raise ParameterError("at least one axis must remain free")
    if slab.sum() <= 0:
        raise ConditionalUndefinedError(f"zero marginal density at {fixed}")
    return SignalPrior(slab / slab.mean())


@dataclass
class AtomlessReport:
    player: int
    passed: bool
    offending_mass: float
    undefined_fraction: float
    pairwise: dict = field(default_factory=dict)

    def to_json(self):
        return {"player": self.player, "passed": self.passed,
                "offending_mass": self.offending_mass,
                "undefined_fraction": self.undefined_fraction,
                "pairwise": {str(j): r for j, r in self.pairwise.items()}}


def _slice_report(density, axis):
    # conditional of `axis` given the others: defined wherever the
    # marginal of the others is positive; a density conditional has no atoms.
    marg = density.sum(axis=axis)
    undefined = marg <= 0
    offending = float(density.sum(axis=axis)[undefined].sum() / density.size)
    return offending, float(undefined.mean())


def check_conditionally_atomless(prior, player):
    """Diagnostic for (weak) conditional atomlessness of a grid prior.

    With a piecewise-constant density every defined conditional has a density,
    hence no atoms; what can go wrong is a conditional that is undefined on a
    set of positive marginal mass, which is reported as ``offending_mass``.
    """
    offending, undefined = _slice_report(prior.density, player)
    pairwise = {}
    for j in range(prior.n):
        if j == player:
            continue
        pair = prior.marginal([player, j]).density
        off, _ = _slice_report(pair, 0)
        pairwise[j] = {"passed": off == 0.0, "offending_mass": off}
    passed = offending == 0.0 and all(r["passed"] for r in pairwise.values())
    return AtomlessReport(player, passed, offending, undefined, pairwise)


def check_absolutely_continuous(prior):
    """Whether the prior is absolutely continuous w.r.t. the product of its marginals."""
    support = prior.density > 0
    prod = np.ones_like(prior.density, dtype=bool)
    for ax in range(prior.n):
        m = prior.marginal([ax]).density > 0
        shape = [1] * prior.n
        shape[ax] = m.size
        prod = prod & m.reshape(shape)
    return bool(np.all(prod[support]))


def _action_range(space):
    if space.kind == "interval":
        return float(space.a), float(space.b)
    return float(space.points.min()), float(space.points.max())


class PayoffModel:
    """A payoff coordinate: parsed expression or multilinear table."""

    def __init__(self, n, expression=None, grids=None, values=None, source=None):
        self.n = n
        self.names = [f"k{j + 1}" for j in range(n)] + [f"x{j + 1}" for j in range(n)]
        self.source = source
        if expression is not None:
            self.kind = "expression"
            self.text = expression
            self.ast = ex.parse_expression(expression, self.names)
        else:
            self.kind = "table"
            values = np.asarray(values, dtype=float)
            if len(grids) != 2 * n or values.ndim != 2 * n:
                raise ValidationError(f"payoff table needs {2 * n} axes")
            if not np.all(np.isfinite(values)):
                raise ValidationError("payoff table values must be finite")
            self.grids = [np.asarray(g, dtype=float) for g in grids]
            self.values = values
            self._interp = RegularGridInterpolator(self.grids, values, method="linear")

    @classmethod
    def expression(cls, n, text):
        return cls(n, expression=text)

    def __call__(self, ks, xs):
        """Evaluate with broadcasting; ``ks``, ``xs`` are lists of arrays."""
        args = list(ks) + list(xs)
        if self.kind == "expression":
            env = dict(zip(self.names, args))
            out = ex.evaluate(self.ast, env)
            return np.broadcast_to(np.asarray(out, dtype=float), np.broadcast_shapes(*[np.shape(a) for a in args]))
        b = np.broadcast_arrays(*[np.asarray(a, dtype=float) for a in args])
        pts = np.stack([a.ravel() for a in b], axis=-1)
        return self._interp(pts).reshape(b[0].shape)

    def check_domain(self, spaces):
        if self.kind != "expression":
            return
        box = {f"k{j + 1}": _action_range(s) for j, s in enumerate(spaces)}
        box.update({f"x{j + 1}": (0.0, 1.0) for j in range(self.n)})
        try:
            ex.interval_eval(self.ast, box)
        except ex.DomainError as e:
            raise ValidationError(f"payoff {self.text!r} is not total on the domain: {e}") from None

    def describe(self):
        return self.text if self.kind == "expression" else f"table:{self.source}"


class GameSpec:
    """Players, action spaces, prior, payoff coordinates and payoff bound."""

    def __init__(self, spaces, prior, payoffs, bound, usual=True, validate=True):
        self.spaces = tuple(spaces)
        self.prior = prior
        self.payoffs = tuple(payoffs)
        self.bound = float(bound)
        self.usual = usual
        if prior.n != self.n:
            raise ValidationError("prior dimension must equal the number of players")
        if usual and self.m != self.n:
            raise ValidationError("a usual game has one payoff per player")
        if validate:
            for p in self.payoffs:
                p.check_domain(self.spaces)
            self.check_bound()

    @property
    def n(self):
        return len(self.spaces)

    @property
    def m(self):
        return len(self.payoffs)

    def check_bound(self, samples=10_000, seed=0):
        rng = np.random.default_rng(seed)
        ks = [s.sample(rng, samples) for s in self.spaces]
        xs = [rng.random(samples) for _ in range(self.n)]
        worst = 0.0
        for c, p in enumerate(self.payoffs):
            vals = np.asarray(p(ks, xs))
            if not np.all(np.isfinite(vals)):
                raise ValidationError(f"payoff u{c + 1} is not finite on the domain")
            worst = max(worst, float(np.abs(vals).max()))
        if worst > self.bound:
            raise ValidationError(f"payoff bound {self.bound} violated: sampled |u| = {worst}")
        return worst

    def payoff_grid(self, c, atoms, nodes):
        """u_c on all combinations: shape (A_1..A_n, Q_1..Q_n).

        ``atoms[j]`` are player j's actions, ``nodes[j]`` its signal points.
        """
        n = self.n
        ks, xs = [], []
        for j in range(n):
            shape = [1] * (2 * n)
            shape[j] = len(atoms[j])
            ks.append(np.asarray(atoms[j], dtype=float).reshape(shape))
            shape = [1] * (2 * n)
            shape[n + j] = len(nodes[j])
            xs.append(np.asarray(nodes[j], dtype=float).reshape(shape))
        full = tuple(len(a) for a in atoms) + tuple(len(q) for q in nodes)
        return np.broadcast_to(self.payoffs[c](ks, xs), full)


def eval_payoff(game, c, k, x):
    k = np.asarray(k, dtype=float).ravel()
    x = np.asarray(x, dtype=float).ravel()
    if k.size != game.n or x.size != game.n:
        raise ParameterError("action and signal profiles need one entry per player")
    for j, s in enumerate(game.spaces):
        if not s.contains(k[j]):
            raise ParameterError(f"action {k[j]} outside player {j + 1}'s action space")
    if np.any((x < 0) | (x > 1)):
        raise ParameterError("signals must lie in [0, 1]")
    return float(game.payoffs[c]([np.array(v) for v in k], [np.array(v) for v in x]))


# ---------------------------------------------------------------------------
# discretized expected payoffs


def fine_nodes(Q):
    return (np.arange(Q) + 0.5) / Q


def _subscripts(n):
    return list(range(n)), list(range(n, 2 * n))


def expected_payoff_tensor(game, c, weights, atoms, subdivision, keep=None):
    """Contract u_c against cell-averaged strategy weights and the prior.

    ``weights[j]`` has shape (Q, A_j).  With ``keep=j`` player j is left
    uncontracted and the result has shape (A_j, Q): the payoff of each action
    on each fine signal cell (already multiplied by the cell mass).
    """
    n = game.n
    Q = game.prior.resolution * subdivision
    mass = game.prior.fine_mass(subdivision)
    u = game.payoff_grid(c, atoms, [fine_nodes(Q)] * n)
    a_sub, q_sub = _subscripts(n)
    operands = [u, a_sub + q_sub, mass, q_sub]
    for j in range(n):
        if j != keep:
            operands += [weights[j], [q_sub[j], a_sub[j]]]
    out = [] if keep is None else [a_sub[keep], q_sub[keep]]
    return np.einsum(*operands, out, optimize=True)


def expected_payoff(game, profile, c, subdivision=2):
    """U_c of a strategy profile on the fine grid with the given subdivision."""
    from .strategy import cell_weights

    if len(profile) != game.n:
        raise ParameterError("profile needs one strategy per player")
    Q = game.prior.resolution * subdivision
    atoms, weights = [], []
    for s in profile:
        a, w = cell_weights(s, Q)
        atoms.append(a)
        weights.append(w)
    return float(expected_payoff_tensor(game, c, weights, atoms, subdivision))


# ---------------------------------------------------------------------------
# game-spec text format

_KEY = re.compile(r"([A-Za-z_]\w*)\s*=\s*")


def _split_keyvalues(line):
    m = re.match(r"\s*(expr|table)\s*=\s*(.*?)\s*$", line)
    if m:
        return [(m.group(1), m.group(2), m.start(2))]
    found = list(_KEY.finditer(line))
    out = []
    for i, k in enumerate(found):
        end = found[i + 1].start() if i + 1 < len(found) else len(line)
        value = line[k.end():end].strip().rstrip(",").strip()
        out.append((k.group(1), value, k.end()))
    return out


def _sections(text):
    sections = []
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        head = re.match(r"\s*\[([^\]]+)\]\s*$", line)
        if head:
            current = {"name": head.group(1).strip(), "line": lineno, "keys": {}, "data": []}
            sections.append(current)
            continue
        if current is None:
            raise ParseError("content before the first section", lineno, 1)
        if "=" in line:
            for key, value, col in _split_keyvalues(line):
                current["keys"][key] = (value, lineno, col + 1)
        else:
            current["data"].append((lineno, line.split()))
    return sections


def _number(value, lineno, col, kind=float):
    try:
        return kind(value)
    except ValueError:
        raise ParseError(f"expected a number, got {value!r}", lineno, col) from None


def _get(section, key, required=True):
    if key not in section["keys"]:
        if required:
            raise ParseError(f"[{section['name']}] is missing '{key}'", section["line"], 1)
        return None
    return section["keys"][key]


def _parse_action(section):
    value, lineno, col = _get(section, "kind")
    parts = value.split()
    if not parts:
        raise ParseError("empty action kind", lineno, col)
    if parts[0] == "interval":
        if len(parts) != 3:
            raise ParseError("expected 'kind=interval a b'", lineno, col)
        a, b = (_number(p, lineno, col) for p in parts[1:])
        try:
            return ActionSpace.interval(a, b)
        except ValidationError as e:
            raise ParseError(str(e), lineno, col) from None
    if parts[0] == "finite":
        rows = [[_number(t, ln, 1) for t in toks] for ln, toks in section["data"]]
        pts = _get(section, "points", required=False)
        if pts is not None:
            points = [_number(t, pts[1], pts[2]) for t in pts[0].split()]
        elif len(parts) > 1:
            points = [_number(t, lineno, col) for t in parts[1:]]
        elif rows:
            points = rows.pop(0)
        else:
            raise ParseError("finite action space lists no points", lineno, col)
        dist = rows if rows else None
        try:
            return ActionSpace.finite(points, dist)
        except ValidationError as e:
            raise ParseError(str(e), lineno, col) from None
    raise ParseError(f"unknown action kind {parts[0]!r}", lineno, col)


def _parse_prior(section, n, strict):
    value, lineno, col = _get(section, "kind")
    kind = value.split()[0] if value.split() else ""
    if kind == "uniform":
        return SignalPrior.uniform(n)
    if kind != "grid":
        raise ParseError(f"unknown prior kind {kind!r}", lineno, col)
    res = _get(section, "resolution")
    G = _number(res[0], res[1], res[2], int)
    if G < 1:
        raise ParseError("resolution must be positive", res[1], res[2])
    vals = [_number(t, ln, 1) for ln, toks in section["data"] for t in toks]
    if len(vals) != G ** n:
        raise ParseError(f"grid prior needs {G ** n} density values, got {len(vals)}",
                         section["line"], 1)
    # row-major with axis 1 fastest
    dens = np.array(vals, dtype=float).reshape((G,) * n, order="F")
    try:
        return SignalPrior(dens, strict=strict)
    except ValidationError as e:
        raise ParseError(str(e), section["line"], 1) from None


def _load_table(path, n):
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    return PayoffModel(n, grids=obj["grids"], values=obj["values"], source=path)


def parse_game_spec(text, base_dir=".", strict=False):
    """Parse and validate the game-spec text format.

    ``strict`` turns prior renormalization into an error.
    """
    sections = _sections(text)
    by_name = {}
    for s in sections:
        if s["name"] in by_name:
            raise ParseError(f"duplicate section [{s['name']}]", s["line"], 1)
        by_name[s["name"]] = s
    if "game" not in by_name:
        raise ParseError("missing [game] section", 1, 1)
    game = by_name["game"]
    n = _number(*_get(game, "players"), int)
    m = _number(*_get(game, "payoffs"), int)
    bound = _number(*_get(game, "bound"))
    usual_v = _get(game, "usual", required=False)
    usual = True if usual_v is None else usual_v[0].lower() == "true"
    if n < 1 or m < 1:
        raise ParseError("players and payoffs must be positive", game["line"], 1)
    spaces = []
    for j in range(1, n + 1):
        if f"action.{j}" not in by_name:
            raise ParseError(f"missing [action.{j}] section", game["line"], 1)
        spaces.append(_parse_action(by_name[f"action.{j}"]))
    if "prior" not in by_name:
        raise ParseError("missing [prior] section", game["line"], 1)
    prior = _parse_prior(by_name["prior"], n, strict)
    payoffs = []
    for c in range(1, m + 1):
        sec = by_name.get(f"payoff.{c}")
        if sec is None:
            raise ParseError(f"missing [payoff.{c}] section", game["line"], 1)
        if "expr" in sec["keys"]:
            text_e, lineno, col = sec["keys"]["expr"]
            try:
                payoffs.append(PayoffModel.expression(n, text_e))
            except ParseError as e:
                raise ParseError(e.message, lineno, col + (e.column or 1) - 1) from None
        elif "table" in sec["keys"]:
            path, lineno, col = sec["keys"]["table"]
            full = path if os.path.isabs(path) else os.path.join(base_dir, path)
            try:
                payoffs.append(_load_table(full, n))
            except (OSError, KeyError, ValueError) as e:
                raise ParseError(f"cannot load payoff table {full}: {e}", lineno, col) from None
        else:
            raise ParseError(f"[payoff.{c}] needs expr= or table=", sec["line"], 1)
    try:
        return GameSpec(spaces, prior, payoffs, bound, usual=usual)
    except ValidationError as e:
        raise ParseError(str(e), game["line"], 1) from None

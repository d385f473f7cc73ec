"""Command-line interface.

Exit codes: 0 pass, 1 certificate failed (or verification mismatch),
2 usage, parse or IO error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, fields

from . import _util, catalog
from .equilibrium import (epsilon_nash_check, find_equilibrium_discretized,
                          theorem2_purify, theorem3_purify_equilibrium)
from .errors import BudgetInfeasibleError, PurekitError
from .game import parse_game_spec
from .purify import PurifyConfig, theorem1_purify, verify_purification
from .strategy import strategy_from_json, strategy_to_json
from .twoplayer import from_spec

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


@dataclass
class RunConfig:
    command: str
    game: str = "cournot"
    players: int | None = None
    player: int = 1
    epsilon: float = 0.1
    seed: int = 0
    subdivision: int = 2
    cells: int | None = None
    net_step: float = 0.05
    net_resolution: int = 20
    ell_points: int = 21
    suite_size: int = 128
    points: int = 21
    iterations: int = 500
    damping: float = 1.0
    resolution: int = 20
    strict: bool = False
    strategy: str | None = None
    profile: str | None = None

    def validate(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        for name in ("subdivision", "net_resolution", "ell_points", "suite_size", "points",
                     "iterations", "resolution"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.cells is not None and self.cells < 1:
            raise ValueError("cells must be at least 1")
        _util.check_seed(self.seed)

    def purify_config(self):
        return PurifyConfig(net_step=self.net_step, net_resolution=self.net_resolution,
                            ell_points=self.ell_points, suite_size=self.suite_size)


def load_game(cfg):
    """(GameSpec, source text) for a catalog name or a game-spec file."""
    if cfg.game in catalog.NAMES:
        text = catalog.catalog_text(cfg.game, cfg.players)
        return parse_game_spec(text, strict=True), text
    if not os.path.exists(cfg.game):
        raise FileNotFoundError(f"game file not found: {cfg.game}")
    with open(cfg.game, encoding="utf-8") as fh:
        text = fh.read()
    base = os.path.dirname(os.path.abspath(cfg.game))
    return parse_game_spec(text, base_dir=base, strict=cfg.strict), text


def _read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _input_strategy(cfg, g, i):
    Q = g.prior.resolution * cfg.subdivision
    if cfg.strategy:
        return strategy_from_json(_read_json(cfg.strategy), g.spaces[i])
    if cfg.game not in catalog.NAMES:
        raise ValueError("--strategy is required for games loaded from a file")
    return catalog.reference_strategy(cfg.game, i, cfg.cells or Q)


def _finder(cfg, g):
    return find_equilibrium_discretized(g, cells=cfg.cells, iterations=cfg.iterations,
                                        damping=cfg.damping, subdivision=cfg.subdivision,
                                        resolution=cfg.resolution, points=cfg.points)


def run_purify(cfg, g):
    i = cfg.player - 1
    if not 0 <= i < g.n:
        raise ValueError(f"player must lie in 1..{g.n}")
    f = _input_strategy(cfg, g, i)
    pc = cfg.purify_config()
    if g.n == 2:
        pure, cert = theorem1_purify(from_spec(g, i, cfg.subdivision), f, cfg.epsilon, cfg.seed, pc)
    else:
        pure, cert = theorem2_purify(g, i, f, cfg.epsilon, cfg.seed, pc, cfg.subdivision)
    report = {"certificate": cert.to_json(), "input_strategy": strategy_to_json(f),
              "pure_strategy": strategy_to_json(pure), "status": cert.status}
    return report, cert.passed


def run_purify_eq(cfg, g):
    if cfg.profile:
        obj = _read_json(cfg.profile)
        profile = [strategy_from_json(s, sp) for s, sp in zip(obj["profile"], g.spaces)]
        finder = None
    else:
        res = _finder(cfg, g)
        profile, finder = res.profile, res.to_json()
    purified, cert = theorem3_purify_equilibrium(g, profile, cfg.epsilon, cfg.seed,
                                                 cfg.purify_config(), cfg.subdivision,
                                                 points=cfg.points)
    report = {"certificate": cert.to_json(), "finder": finder,
              "input_profile": [strategy_to_json(s) for s in profile],
              "pure_profile": [strategy_to_json(s) for s in purified], "status": cert.status}
    return report, cert.passed


def run_find_eq(cfg, g):
    res = _finder(cfg, g)
    report = res.to_json()
    report["status"] = "PASS" if res.regret < cfg.epsilon else "FAILED"
    return report, res.regret < cfg.epsilon


def run_nash_check(cfg, g):
    if not cfg.profile:
        raise ValueError("--profile is required")
    obj = _read_json(cfg.profile)
    profile = [strategy_from_json(s, sp) for s, sp in zip(obj["profile"], g.spaces)]
    regrets = epsilon_nash_check(g, profile, subdivision=cfg.subdivision, points=cfg.points)
    ok = max(regrets) < cfg.epsilon
    return {"regrets": regrets, "epsilon": cfg.epsilon, "grid_points": cfg.points,
            "subdivision": cfg.subdivision, "status": "PASS" if ok else "FAILED"}, ok


RUNNERS = {"purify": run_purify, "purify-eq": run_purify_eq, "find-eq": run_find_eq,
           "nash-check": run_nash_check}


def execute(cfg):
    """Run a command; returns (report dict, passed)."""
    cfg.validate()
    g, text = load_game(cfg)
    body, ok = RUNNERS[cfg.command](cfg, g)
    report = {"config": asdict(cfg), "game_text": text}
    report.update(body)
    return report, ok


def run_verify(path):
    """Re-run a stored report and compare; also re-check a stored pure strategy."""
    stored = _read_json(path)
    cfg = RunConfig(**stored["config"])
    cfg.validate()
    text = stored["game_text"]
    g = parse_game_spec(text, strict=cfg.strict)
    body, _ = RUNNERS[cfg.command](cfg, g)
    fresh = {"config": asdict(cfg), "game_text": text}
    fresh.update(body)
    mismatches = _diff(stored, fresh)
    extra = {}
    if cfg.command == "purify" and g.n == 2:
        i = cfg.player - 1
        f = strategy_from_json(stored["input_strategy"], g.spaces[i])
        pure = strategy_from_json(stored["pure_strategy"], g.spaces[i])
        gaps, q_b, _ = verify_purification(from_spec(g, i, cfg.subdivision), f, pure,
                                           (cfg.seed + 1) % (_util.SEED_MAX + 1),
                                           cfg.purify_config())
        extra = {"fresh_suite_gap": float(max(gaps)), "quadrature_budget": q_b}
        if max(gaps) >= cfg.epsilon + q_b:
            mismatches.append("stored pure strategy fails a fresh adversarial suite")
    ok = not mismatches and stored.get("status") == "PASS"
    return {"report": path, "mismatches": mismatches, "fresh_check": extra,
            "status": "PASS" if ok else "FAILED"}


def _diff(a, b, path=""):
    """Paths where two JSON documents differ (after normalization)."""
    a, b = _util.to_jsonable(a), _util.to_jsonable(b)
    if isinstance(a, dict) and isinstance(b, dict):
        out = []
        for k in sorted(set(a) | set(b)):
            if k not in a or k not in b:
                out.append(f"{path}/{k}")
            else:
                out.extend(_diff(a[k], b[k], f"{path}/{k}"))
        return out
    if isinstance(a, list) and isinstance(b, list):
        if len(a) != len(b):
            return [path]
        out = []
        for i, (x, y) in enumerate(zip(a, b)):
            out.extend(_diff(x, y, f"{path}/{i}"))
        return out
    return [] if a == b else [path or "/"]


def build_parser():
    p = argparse.ArgumentParser(prog="purekit", description="Purification of mixed strategies "
                                "in Bayesian games with certified payoff gaps.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, eps=0.1):
        sp.add_argument("--game", default="cournot", help="catalog name or game-spec file")
        sp.add_argument("--players", type=int, help="player count for catalog games")
        sp.add_argument("--epsilon", type=float, default=eps)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--subdivision", type=int, default=2, help="fine cells per prior cell")
        sp.add_argument("--cells", type=int, help="strategy cells on the signal axis")
        sp.add_argument("--points", type=int, default=21, help="action grid points")
        sp.add_argument("--strict", action="store_true", help="reject unnormalized priors")
        sp.add_argument("--out", help="report path (JSON)")

    def purif(sp):
        sp.add_argument("--net-step", type=float, default=0.05)
        sp.add_argument("--net-resolution", type=int, default=20)
        sp.add_argument("--ell-points", type=int, default=21)
        sp.add_argument("--suite-size", type=int, default=128)

    def finder(sp):
        sp.add_argument("--iterations", type=int, default=500)
        sp.add_argument("--damping", type=float, default=1.0)
        sp.add_argument("--resolution", type=int, default=20, help="weight resolution")

    sp = sub.add_parser("purify", help="purify one player's mixed strategy")
    common(sp)
    purif(sp)
    sp.add_argument("--player", type=int, default=1)
    sp.add_argument("--strategy", help="mixed strategy JSON (default: catalog reference)")

    sp = sub.add_parser("purify-eq", help="purify an equilibrium profile")
    common(sp, eps=0.3)
    purif(sp)
    finder(sp)
    sp.add_argument("--profile", help="profile JSON (default: run the finder)")

    sp = sub.add_parser("find-eq", help="discretized equilibrium search")
    common(sp, eps=0.05)
    finder(sp)

    sp = sub.add_parser("nash-check", help="grid-deviation regret of a profile")
    common(sp, eps=0.05)
    sp.add_argument("--profile", required=True)

    sp = sub.add_parser("verify", help="re-check a stored report")
    sp.add_argument("report")
    sp.add_argument("--out")

    sp = sub.add_parser("catalog", help="list built-in games")
    sp.add_argument("--show", help="print the game-spec text of one game")
    sp.add_argument("--players", type=int)
    sp.add_argument("--out")
    return p


def _config_from_args(args):
    names = {f.name for f in fields(RunConfig)}
    kw = {k: v for k, v in vars(args).items() if k in names and v is not None}
    return RunConfig(**kw)


def _emit(obj, out):
    if out:
        _util.write_json_atomic(out, obj)
    else:
        sys.stdout.write(_util.dumps(obj))


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "catalog":
            if args.show:
                sys.stdout.write(catalog.catalog_text(args.show, args.players))
                return EXIT_PASS
            listing = {name: catalog.describe(name) for name in catalog.NAMES}
            _emit(listing, args.out)
            return EXIT_PASS
        if args.command == "verify":
            result = run_verify(args.report)
            _emit(result, args.out)
            for m in result["mismatches"]:
                print(f"mismatch: {m}", file=sys.stderr)
            return EXIT_PASS if result["status"] == "PASS" else EXIT_FAIL
        cfg = _config_from_args(args)
        report, ok = execute(cfg)
        _emit(report, args.out)
        print(f"{cfg.command}: {report['status']}", file=sys.stderr)
        return EXIT_PASS if ok else EXIT_FAIL
    except BudgetInfeasibleError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAIL
    except (PurekitError, OSError, ValueError, KeyError, TypeError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

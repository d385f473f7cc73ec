"""Acceptance criteria 1-7, each at its stated tolerance.

Every criterion prints one ``ACCEPTANCE k: PASS/FAIL`` line (also collected
in the terminal summary).  Each ``run_k`` returns ``(ok, detail, payload)``;
the payload feeds the determinism check.
"""

import itertools
import time
from fractions import Fraction

import numpy as np
import pytest

from oracles import mc_gap
from purekit import _util, catalog
from purekit.equilibrium import (budget_schedule,
                                 find_equilibrium_discretized, integrate_out_players,
                                 theorem3_purify_equilibrium)
from purekit.game import expected_payoff
from purekit.measures import (ActionSpace, FiniteSupportMeasure, make_dense_net,
                              prohorov_distance, prohorov_oracle)
from purekit.purify import (AuxiliaryMeasure, PurifyConfig, SimplexPoint, round_simplex,
                            theorem1_purify)
from purekit.strategy import SimpleApproximator, cell_weights
from purekit.twoplayer import (Opponent, adversarial_suite, combine, embed_weights,
                               from_spec, gap_tables, lift_opponents)


# ---------------------------------------------------------------------------
# 1. Prohorov oracle equivalence


def _random_measure(rng, points):
    k = rng.integers(1, 9)
    idx = rng.choice(len(points), size=min(k, len(points)), replace=False)
    w = rng.dirichlet(np.ones(len(idx)))
    return FiniteSupportMeasure(points[idx], w)


def run_1(seed=0):
    rng = np.random.default_rng(seed)
    worst, values, elapsed = 0.0, [], 0.0
    for t in range(240):
        if t % 2 == 0:
            space = ActionSpace.interval()
            pts = rng.random(16)
        else:
            size = int(rng.integers(3, 13))
            xy = rng.random((size, 2))
            D = np.sqrt(((xy[:, None] - xy[None]) ** 2).sum(-1))
            pts = np.arange(size, dtype=float)
            space = ActionSpace.finite(pts, D)
        P, Q = _random_measure(rng, pts), _random_measure(rng, pts)
        start = time.perf_counter()
        d = prohorov_distance(P, Q, space)
        elapsed += time.perf_counter() - start
        worst = max(worst, abs(d - prohorov_oracle(P, Q, space)))
        values.append(d)
    ok = worst <= 2e-9 and elapsed < 10
    return ok, f"240 pairs, max |fast - oracle| = {worst:.2e}, {elapsed:.2f} s", values


# ---------------------------------------------------------------------------
# 2. Lemma 1 convergence


def lemma1_strategies(cells=8):
    out = [catalog.reference_strategy(name, 0, cells) for name in catalog.NAMES]
    for t, name in enumerate(catalog.NAMES):
        out.extend(catalog.reference_family(name, 0, cells, 4, seed=100 + t))
    return out


def run_2(seed=0):
    net = make_dense_net(ActionSpace.interval(), 0.05, 20)
    start = time.perf_counter()
    monotone, reached, curves = True, [], []
    for f in lemma1_strategies():
        ap = SimpleApproximator(f, net)
        nu, curve = 1, []
        while True:
            curve.append((nu, ap.at(nu)[1]))
            if curve[-1][1] < 0.05 or nu == len(net):
                break
            nu = min(2 * nu, len(net))
        # the sup is a step function of nu; check it at every improvement too
        for b in ap.search.breakpoints():
            if b <= nu:
                curve.append((b, ap.at(b)[1]))
        curve.sort()
        sups = [s for _, s in curve]
        monotone &= all(b <= a + 1e-15 for a, b in zip(sups, sups[1:]))
        reached.append(curve[-1][1] < 0.05 and curve[-1][0] <= len(net))
        curves.append(curve)
    elapsed = time.perf_counter() - start
    ok = monotone and all(reached) and elapsed < 30
    last = max(c[-1][0] for c in curves)
    return ok, (f"20 strategies, monotone={monotone}, below 0.05: {sum(reached)}/20 "
                f"(largest nu {last}), {elapsed:.1f} s"), curves


# ---------------------------------------------------------------------------
# 3. Step 5 expectation bound


def run_3(seed=0):
    start = time.perf_counter()
    s = SimplexPoint.from_weights([0.5, 0.5], 2)
    ok, parts, payload = True, [], {}
    for M in (4, 16, 64):
        aux = AuxiliaryMeasure.uniform(M, [0.0, 1.0])
        T = np.ones(M, dtype=bool)
        sq = np.array([round_simplex(aux, T, s, seed=seed * 1000 + k, scheme="independent").seminorm ** 2
                       for k in range(1000)])
        mean, se = sq.mean(), sq.std(ddof=1) / np.sqrt(sq.size)
        ok &= mean <= 1 / M + 3 * se
        parts.append(f"M={M}: {mean:.5f} <= {1 / M + 3 * se:.5f}")
        payload[M] = sq.tolist()
    elapsed = time.perf_counter() - start
    ok &= elapsed < 60
    return ok, "; ".join(parts) + f", {elapsed:.1f} s", payload


# ---------------------------------------------------------------------------
# 4. Theorem 1 end-to-end


def suite_gaps(game, f, pure, cert, cfg):
    """Signed gap table (members, coordinates) over the certificate's suite."""
    suite = adversarial_suite(game, cfg.suite_size, cert.suite["seed"], cfg.suite_points,
                              cfg.suite_resolution)
    af, Ff = cell_weights(f, game.Qx)
    ap, Fp = cell_weights(pure, game.Qx)
    atoms = np.union1d(af, ap)
    table, _ = gap_tables(game, embed_weights(af, Ff, atoms), embed_weights(ap, Fp, atoms),
                          atoms, suite)
    return suite, table


def theorem1_case(name, eps, seed=42, subdivision=2):
    spec = catalog.catalog_game(name)
    game = from_spec(spec, 0, subdivision)
    f = catalog.reference_strategy(name, 0, game.Qx)
    start = time.perf_counter()
    pure, cert = theorem1_purify(game, f, eps, seed)
    return spec, game, f, pure, cert, time.perf_counter() - start


def run_4(seed=42, monte_carlo=True, samples=10 ** 6):
    ok, parts, payload = True, [], []
    cfg = PurifyConfig()
    for name, eps in itertools.product(("cournot", "zero-sum-signal"), (0.2, 0.1)):
        spec, game, f, pure, cert, elapsed = theorem1_case(name, eps, seed)
        kappa_bound = cert.stage_bounds["step7"]["kappa_bound"]
        gap = max(cert.adversarial_gaps)
        checks = [cert.passed,
                  len(pure.range()) <= len(cert.K_prime),
                  cert.seminorm < kappa_bound,
                  gap < eps + cert.quadrature_budget,
                  cert.suite["members"] >= 100,
                  elapsed < 600]
        mc_err = 0.0
        if monte_carlo:
            suite, table = suite_gaps(game, f, pure, cert, cfg)
            rng = np.random.default_rng(seed)
            for t in range(3):
                o, c = int(rng.integers(len(suite))), int(rng.integers(game.m))
                est, _ = mc_gap(spec, 0, f, pure, suite[o].weights[0], suite[o].atoms[0], c,
                                samples, seed + t)
                mc_err = max(mc_err, abs(est - table[o, c]))
            checks.append(mc_err <= 0.005)
        ok &= all(checks)
        parts.append(f"{name} eps={eps}: {cert.status}, gap {gap:.4f}, |range| "
                     f"{len(pure.range())}/{len(cert.K_prime)}, MC err {mc_err:.4f}, {elapsed:.1f} s")
        payload.append({"certificate": cert.to_json(), "pure": pure.to_json()})
    return ok, "; ".join(parts), payload


# ---------------------------------------------------------------------------
# 5. Theorem 3 end-to-end


def run_5(seed=7, epsilon=0.3):
    ok, parts, payload = True, [], []
    for name, n in (("zero-sum-signal", 2), ("quadratic-coordination", 3)):
        g = catalog.catalog_game(name, n)
        start = time.perf_counter()
        res = find_equilibrium_discretized(g)
        purified, cert = theorem3_purify_equilibrium(g, res.profile, epsilon, seed)
        elapsed = time.perf_counter() - start
        r0 = cert.equilibrium_input_regret
        sched = budget_schedule(epsilon, n)
        telescoping = (all(sched[m] * 3 == sched[m + 1] for m in range(n - 1))
                       and sched[-1] * 3 == Fraction(epsilon))
        regret = max(max(p["regrets"]) for p in cert.profiles)
        dev = max(p["payoff_deviation"] for p in cert.profiles)
        checks = [res.regret < 0.05, r0 < 0.05, cert.passed, telescoping,
                  len(cert.profiles) == 2 ** n, regret < epsilon + r0, dev < epsilon,
                  elapsed < 1800]
        ok &= all(checks)
        parts.append(f"{name} n={n}: {cert.status}, r0 {r0:.1e}, max regret {regret:.1e}, "
                     f"max |dU| {dev:.1e}, {elapsed:.1f} s")
        payload.append({"finder": res.to_json(), "certificate": cert.to_json(),
                        "pure": [p.to_json() for p in purified]})
    return ok, "; ".join(parts), payload


# ---------------------------------------------------------------------------
# 6. proof identities


def _random_opponent(rng, Qy, grid):
    W = rng.dirichlet(np.ones(len(grid)) * 0.5, size=Qy)
    return Opponent((grid,), (W,))


def run_6(seed=3, subdivision=2):
    rng = np.random.default_rng(seed)
    # integrate-out: U^{mjh}(f_m, g_j) = U(g_j, h_-j) with f_m in slot m
    worst_io, values = 0.0, []
    games = [catalog.catalog_game("quadratic-coordination", 3), catalog.catalog_game("cournot", 3)]
    for t in range(50):
        g = games[t % 2]
        Q = g.prior.resolution * subdivision
        m, j = (int(v) for v in rng.choice(3, size=2, replace=False))
        profile = [catalog.reference_family("cournot", p, Q, 1, seed=1000 * t + p)[0] for p in range(3)]
        G = integrate_out_players(g, profile, m, j, subdivision)
        am, Wm = cell_weights(profile[m], Q)
        aj, Wj = cell_weights(profile[j], Q)
        lhs = G.values(Wm, am, Opponent((aj,), (Wj,)))
        rhs = [expected_payoff(g, profile, i, subdivision) for i in range(g.n)]
        worst_io = max(worst_io, float(np.max(np.abs(lhs - np.array(rhs)))))
        values.append(lhs.tolist())
    # Lemma 2: composite gap on coordinate t = (1/M) * sub-game gap
    two = [from_spec(catalog.catalog_game("zero-sum-signal"), 0, subdivision),
           from_spec(catalog.catalog_game("quadratic-coordination"), 0, subdivision)]
    g3 = catalog.catalog_game("quadratic-coordination", 3)
    h3 = [catalog.reference_strategy("quadratic-coordination", p, 4) for p in range(3)]
    two.append(integrate_out_players(g3, h3, 0, 2, subdivision))
    C = combine(two)
    M = len(C.parts["games"])
    grid = np.linspace(0, 1, 21)
    worst_l2 = 0.0
    for t in range(50):
        f1, f2 = catalog.reference_family("zero-sum-signal", 0, C.Qx, 2, seed=5000 + t)
        a1, W1 = cell_weights(f1, C.Qx)
        a2, W2 = cell_weights(f2, C.Qx)
        atoms = np.union1d(a1, a2)
        F1, F2 = embed_weights(a1, W1, atoms), embed_weights(a2, W2, atoms)
        opps = [_random_opponent(rng, sub.Qy, grid) for sub, _ in C.parts["games"]]
        lifted = lift_opponents(C, opps)
        comp = C.values(F1, atoms, lifted) - C.values(F2, atoms, lifted)
        for k, ((sub, c), opp) in enumerate(zip(C.parts["games"], opps)):
            gap = (sub.values(F1, atoms, opp) - sub.values(F2, atoms, opp))[c]
            worst_l2 = max(worst_l2, abs(comp[k] - gap / M))
        values.append(comp.tolist())
    ok = worst_io <= 1e-10 and worst_l2 <= 1e-12
    return ok, (f"integrate-out max err {worst_io:.1e} (50 cases); "
                f"composite max err {worst_l2:.1e} (50 cases, {M} sub-games)"), values


# ---------------------------------------------------------------------------
# 7. determinism


def run_7():
    runs = {1: run_1, 2: run_2, 3: run_3, 4: lambda: run_4(monte_carlo=False), 5: run_5,
            6: run_6}
    same = []
    for k, fn in runs.items():
        first, second = _util.dumps(fn()[2]), _util.dumps(fn()[2])
        same.append((k, first == second, len(first)))
    ok = all(s for _, s, _ in same)
    detail = ", ".join(f"{k}:{'same' if s else 'DIFFERENT'} ({n} bytes)" for k, s, n in same)
    return ok, "byte-identical reruns: " + detail, None


# ---------------------------------------------------------------------------


def _check(acceptance, number, runner):
    ok, detail, _ = runner()
    acceptance(number, ok, detail)
    assert ok, detail


def test_1_prohorov_oracle(acceptance):
    _check(acceptance, 1, run_1)


def test_2_lemma1_convergence(acceptance):
    _check(acceptance, 2, run_2)


def test_3_step5_expectation(acceptance):
    _check(acceptance, 3, run_3)


@pytest.mark.slow
def test_4_theorem1_end_to_end(acceptance):
    _check(acceptance, 4, run_4)


@pytest.mark.slow
def test_5_theorem3_end_to_end(acceptance):
    _check(acceptance, 5, run_5)


def test_6_proof_identities(acceptance):
    _check(acceptance, 6, run_6)


@pytest.mark.slow
def test_7_determinism(acceptance):
    _check(acceptance, 7, run_7)

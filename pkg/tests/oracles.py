"""Independent reference computations used by the tests.

None of these share code paths with the library beyond reading inputs.
"""

import itertools

import numpy as np


def mc_gap(spec, player, f, pure, weights, grid, c, samples, seed):
    """Monte Carlo estimate of U_c(f, g) - U_c(pure, g) in a two-player game.

    The opponent g plays ``grid`` with probabilities ``weights[cell(y)]`` on
    ``Q = G * subdivision`` uniform cells of its signal.  Signals are sampled
    from the prior; actions are integrated exactly and payoffs evaluated on
    the continuum (no midpoint freezing).
    """
    rng = np.random.default_rng(seed)
    xy = spec.prior.sample(rng, samples)
    other = 1 - player
    x, y = xy[:, player], xy[:, other]
    Qy = weights.shape[0]
    ycell = np.clip((y * Qy).astype(int), 0, Qy - 1)
    u = spec.payoffs[c]

    def expected_vs_opponent(k, mask):
        tot = np.zeros(mask.sum())
        for l, ell in enumerate(grid):
            w = weights[ycell[mask], l]
            if not np.any(w):
                continue
            ks = [None, None]
            ks[player] = np.full(mask.sum(), k)
            ks[other] = np.full(mask.sum(), ell)
            xs = [None, None]
            xs[player], xs[other] = x[mask], y[mask]
            tot += w * np.broadcast_to(u(ks, xs), (mask.sum(),))
        return tot

    diff = np.zeros(samples)
    fcell = np.clip(np.searchsorted(f.partition, x, side="left") - 1, 0, f.cells - 1)
    for j, p in enumerate(f.values):
        mask = fcell == j
        if mask.any():
            for a, w in zip(p.support.ravel(), p.weights):
                diff[mask] += w * expected_vs_opponent(a, mask)
    pcell = np.clip(np.searchsorted(pure.partition, x, side="left") - 1, 0, len(pure.actions) - 1)
    for j, a in enumerate(pure.actions):
        mask = pcell == j
        if mask.any():
            diff[mask] -= expected_vs_opponent(a, mask)
    return float(diff.mean()), float(diff.std() / np.sqrt(samples))


def prohorov_bruteforce(p_pts, p_w, q_pts, q_w, dist):
    """Prohorov distance by enumerating subsets A of the P support.

    rho = inf eps with P(A) <= Q(A^eps) + eps for all A (fattening strict).
    Candidates are pairwise distances and the slack values.
    """
    n = len(p_pts)
    D = np.array([[dist(a, b) for b in q_pts] for a in p_pts])

    def ok(eps):
        for r in range(1, n + 1):
            for A in itertools.combinations(range(n), r):
                near = np.any(D[list(A)] < eps, axis=0)
                if sum(p_w[i] for i in A) > q_w[near].sum() + eps + 1e-12:
                    return False
        return True

    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = (lo + hi) / 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi

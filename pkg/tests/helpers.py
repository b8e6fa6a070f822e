"""Shared builders and reference oracles for the test suite.

Games built here come straight from numpy draws, not from the package's
generator, so a generator bug cannot mask a library bug.  The oracles
recompute payoffs and regrets by direct summation or full enumeration;
they are deliberately slow and simple.
"""

import itertools

import numpy as np

from lippoly import MixedProfile, PolymatrixGame


def random_game(n, m, lam, seed, spread_scale=1.0):
    """Valid game with per-pair coefficient spread up to the allowed cap.

    Each (i, i', j) row is a base offset in [0, 1/(n-1) - s] plus
    per-column deviations in [0, s], s = spread_scale * min(lam, 1/(n-1)).
    Sums over opponents then land in [0, 1] and every spread is <= lam.
    """
    rng = np.random.default_rng(seed)
    s = spread_scale * min(lam, 1.0 / (n - 1))
    base = rng.uniform(0.0, 1.0 / (n - 1) - s, size=(n, n, m, 1))
    dev = rng.uniform(0.0, s, size=(n, n, m, m))
    beta = base + dev
    idx = np.arange(n)
    beta[idx, idx] = 0.0
    return PolymatrixGame(n=n, m=m, beta=beta, lam=lam)


def zero_game(n=3, m=2, lam=0.5):
    return PolymatrixGame(n=n, m=m, beta=np.zeros((n, n, m, m)), lam=lam)


def coordination_game(lam=1.0):
    """Two players, two actions, payoff 1 for matching and 0 otherwise."""
    beta = np.zeros((2, 2, 2, 2))
    beta[0, 1] = np.eye(2)
    beta[1, 0] = np.eye(2)
    return PolymatrixGame(n=2, m=2, beta=beta, lam=lam)


def matching_pennies_game():
    """Row player wants to match, column player wants to mismatch."""
    beta = np.zeros((2, 2, 2, 2))
    beta[0, 1] = np.eye(2)
    beta[1, 0] = 1.0 - np.eye(2)
    return PolymatrixGame(n=2, m=2, beta=beta, lam=1.0)


def constant_gap_game(gaps, lam, n=2):
    """Player 0's action j pays gaps[j] regardless of what anyone does.

    Realized through player 1's block with identical columns, so the
    per-pair spread is zero and any declared lam is consistent.  All
    other blocks are zero; every other player is indifferent.
    """
    m = len(gaps)
    beta = np.zeros((n, n, m, m))
    beta[0, 1] = np.asarray(gaps, dtype=float)[:, None] * np.ones((1, m))
    return PolymatrixGame(n=n, m=m, beta=beta, lam=lam)


def random_mixed(n, m, seed):
    rng = np.random.default_rng(seed)
    p = rng.uniform(0.0, 1.0, size=(n, m)) + 1e-3
    return MixedProfile(p / p.sum(axis=1, keepdims=True))


def random_pure_actions(n, m, seed):
    return np.random.default_rng(seed).integers(0, m, size=n)


def payoff_oracle(game, i, j, actions):
    """Payoff of (i, j) against a pure profile by direct coefficient sum."""
    total = 0.0
    for ip in range(game.n):
        if ip != i:
            total += float(game.beta[i, ip, j, int(actions[ip])])
    return total


def mixed_payoff_oracle(game, i, j, probs):
    """Exhaustive expectation over every opponent pure profile."""
    n, m = game.n, game.m
    others = [ip for ip in range(n) if ip != i]
    actions = np.zeros(n, dtype=int)
    total = 0.0
    for combo in itertools.product(range(m), repeat=len(others)):
        weight = 1.0
        for ip, a in zip(others, combo):
            weight *= float(probs[ip][a])
            actions[ip] = a
        if weight:
            total += weight * payoff_oracle(game, i, j, actions)
    return total


def regret_oracle(game, i, probs):
    """Best payoff minus realized payoff, both through the enumeration oracle."""
    values = [mixed_payoff_oracle(game, i, j, probs) for j in range(game.m)]
    realized = sum(float(probs[i][j]) * values[j] for j in range(game.m))
    return max(max(values) - realized, 0.0)

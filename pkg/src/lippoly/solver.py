"""Mixed approximate-equilibrium search.

Two mechanisms:

* `solve_mixed` runs simultaneous smoothed best-response dynamics under a
  geometrically cooled temperature, tracks the exact max regret of every
  iterate, and keeps the best one.  If cooling alone misses the target, a
  local minimization of the hinged squared regret excess (over softmax-
  reparametrized strategies, with an analytic gradient) finishes the job;
  a zero objective certifies every player at or below the requested level.
* `brute_force_kuniform` exhaustively scans the grid of 1/k-uniform
  profiles for tiny instances and returns the exact grid minimizer.

Both are deterministic given the config seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import BudgetExceeded, UsageError
from .game import MixedProfile, regret_report

# Exhaustive scan refuses above this many candidate profiles.
BRUTE_FORCE_GUARD = 10_000_000
# Hinge cut as a fraction of the target: certified iterates land strictly under.
POLISH_CUT = 0.9
# Candidate profiles evaluated per vectorized chunk in the exhaustive scan.
CHUNK = 16384
# Cooling iterations without a new best iterate before handing off to polish.
STALL_WINDOW = 250


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for `solve_mixed`.

    target_epsilon: the regret level to reach (e.g. lam/8 for binary games,
    ((m-1)/m)^2 lam for the m-action pipeline).  step_schedule is "fixed"
    (constant damping 0.25) or "harmonic" (damping 1/(t+2), fictitious-play
    style averaging).  uniform_grid_k, when set, routes the solve through the
    exhaustive k-uniform scan instead of the dynamics.
    """

    target_epsilon: float
    max_iterations: int = 3000
    step_schedule: str = "fixed"
    seed: int = 0
    uniform_grid_k: int | None = None

    def __post_init__(self):
        if self.target_epsilon <= 0:
            raise UsageError(f"target_epsilon must be positive, got {self.target_epsilon}")
        if self.max_iterations < 1:
            raise UsageError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.step_schedule not in ("fixed", "harmonic"):
            raise UsageError(f'step_schedule must be "fixed" or "harmonic", got {self.step_schedule!r}')


@dataclass(frozen=True)
class SolveResult:
    profile: MixedProfile
    achieved_max_regret: float
    iterations_used: int
    converged: bool


def default_target_epsilon(game):
    """The purification pipelines' required input levels, by action count."""
    if game.m == 2:
        return game.lam / 8.0
    return ((game.m - 1) / game.m) ** 2 * game.lam


def solve_mixed(game, config):
    """Best-effort mixed equilibrium search; returns the best profile visited.

    converged is True iff the achieved max regret is at or below
    config.target_epsilon.  Non-convergence is an outcome, not an error.
    """
    if config.uniform_grid_k is not None:
        result = brute_force_kuniform(game, config.uniform_grid_k)
        return SolveResult(
            profile=result.profile,
            achieved_max_regret=result.achieved_max_regret,
            iterations_used=result.iterations_used,
            converged=result.achieved_max_regret <= config.target_epsilon,
        )

    target = config.target_epsilon
    best_probs, best_reg, iters = _anneal(game, config, config.seed, jitter=False)
    if best_reg > target:
        probs, reg, evals = _polish(game, best_probs, POLISH_CUT * target)
        iters += evals
        if reg < best_reg:
            best_probs, best_reg = probs, reg
    if best_reg > target:
        # One cooled restart from a jittered start, then polish again.
        probs, reg, used = _anneal(game, config, config.seed + 0x9E3779B9, jitter=True)
        iters += used
        if reg < best_reg:
            best_probs, best_reg = probs, reg
        if best_reg > target:
            probs, reg, evals = _polish(game, best_probs, POLISH_CUT * target)
            iters += evals
            if reg < best_reg:
                best_probs, best_reg = probs, reg

    profile = MixedProfile(best_probs)
    achieved = regret_report(game, profile).max_regret
    return SolveResult(
        profile=profile,
        achieved_max_regret=achieved,
        iterations_used=iters,
        converged=achieved <= target,
    )


def _anneal(game, config, seed, jitter):
    n, m = game.n, game.m
    # Flattened to an (nm, nm) operator so each payoff pass is one BLAS matvec.
    B = np.ascontiguousarray(game.beta.transpose(0, 2, 1, 3).reshape(n * m, n * m))
    target = config.target_epsilon
    probs = np.full((n, m), 1.0 / m)
    if jitter:
        rng = np.random.default_rng(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
        probs += 0.01 * (rng.random((n, m)) - 0.5)
        probs = np.abs(probs)
        probs /= probs.sum(axis=1, keepdims=True)

    U0 = (B @ probs.ravel()).reshape(n, m)
    spread = float((U0.max(axis=1) - U0.min(axis=1)).max()) if n else 0.0
    tau_hi = max(spread, 4.0 * target)
    tau_lo = 0.4 * target

    best_probs = probs.copy()
    best_reg = math.inf
    last_gain = 0
    total = config.max_iterations
    for t in range(total):
        U = (B @ probs.ravel()).reshape(n, m)
        per = U.max(axis=1) - (U * probs).sum(axis=1)
        reg = float(per.max()) if n else 0.0
        if reg < best_reg:
            best_reg = reg
            best_probs = probs.copy()
            last_gain = t
            if best_reg <= target:
                return best_probs, best_reg, t + 1
        elif t - last_gain >= STALL_WINDOW:
            # Oscillating around a local basin; the polish stage takes over.
            return best_probs, best_reg, t + 1
        frac = t / max(1, total - 1)
        tau = tau_hi * (tau_lo / tau_hi) ** frac
        if config.step_schedule == "fixed":
            gamma = 0.25
        else:
            gamma = 1.0 / (t + 2)
        response = _softmax_rows(U / tau)
        probs = (1.0 - gamma) * probs + gamma * response
    return best_probs, best_reg, total


def _polish(game, probs0, cut, maxiter=400):
    """Drive every regret at or below `cut` by L-BFGS on softmax logits.

    Objective: sum of max(regret_i - cut, 0)^2.  Players already under the
    cut contribute nothing, so the search only moves the offenders.
    """
    n, m = game.n, game.m
    beta = game.beta
    rows = np.arange(n)
    z0 = np.log(np.clip(probs0, 1e-12, None))

    def objective(z):
        P = _softmax_rows(z.reshape(n, m))
        U = np.einsum("abcd,bd->ac", beta, P)
        jstar = U.argmax(axis=1)
        reg = U[rows, jstar] - (U * P).sum(axis=1)
        h = np.maximum(reg - cut, 0.0)
        f = float(h @ h)
        # d reg_i / d P[b, :] = beta[i, b, jstar_i, :] - P[i, :] @ beta[i, b]
        # for b != i; the self block is zero, and the own-row derivative of
        # reg_i is -U[i] (only the realized-payoff term depends on P[i]).
        W = beta[rows, :, jstar, :] - np.einsum("ac,abcd->abd", P, beta)
        G = np.einsum("a,abd->bd", 2.0 * h, W)
        G -= (2.0 * h)[:, None] * U
        GZ = P * (G - (P * G).sum(axis=1, keepdims=True))
        return f, GZ.ravel()

    res = minimize(
        objective,
        z0.ravel(),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": maxiter, "ftol": 1e-18, "gtol": 1e-14},
    )
    P = _softmax_rows(res.x.reshape(n, m))
    P /= P.sum(axis=1, keepdims=True)
    per = regret_report_probs(game, P)
    return P, float(per.max()) if n else 0.0, int(res.nfev)


def regret_report_probs(game, probs):
    """Per-player regrets for a raw probability matrix (no profile object)."""
    U = np.einsum("abcd,bd->ac", game.beta, probs)
    per = U.max(axis=1) - (U * probs).sum(axis=1)
    return np.maximum(per, 0.0)


def _softmax_rows(Z):
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


def kuniform_grid(m, k):
    """All distributions over m actions with probabilities multiples of 1/k,
    as an array in lexicographic order of the underlying count vectors."""
    counts = list(_compositions(k, m))
    return np.asarray(counts, dtype=np.float64) / float(k)


def _compositions(k, m):
    if m == 1:
        yield (k,)
        return
    for first in range(k + 1):
        for rest in _compositions(k - first, m - 1):
            yield (first,) + rest


def brute_force_kuniform(game, k):
    """Exact minimizer of max regret over the 1/k-uniform profile grid.

    Refuses when the candidate count exceeds the guard.  The first grid point
    attaining the minimum (in player-0-major lexicographic order) is
    returned, so the result is deterministic.
    """
    if k < 1:
        raise UsageError(f"grid resolution k must be >= 1, got {k}")
    grid = kuniform_grid(game.m, k)
    per_player = grid.shape[0]
    total = per_player ** game.n
    if total > BRUTE_FORCE_GUARD:
        raise BudgetExceeded(
            f"{per_player}^{game.n} = {total} candidate profiles exceeds the "
            f"{BRUTE_FORCE_GUARD} guard",
            estimate=total,
        )

    beta = game.beta
    dims = (per_player,) * game.n
    best_val = math.inf
    best_idx = None
    for start in range(0, total, CHUNK):
        stop = min(start + CHUNK, total)
        flat = np.arange(start, stop)
        idx = np.stack(np.unravel_index(flat, dims), axis=1)
        chunk = grid[idx]
        U = np.einsum("abcd,pbd->pac", beta, chunk)
        reg = U.max(axis=2) - (U * chunk).sum(axis=2)
        worst = reg.max(axis=1)
        pos = int(np.argmin(worst))
        if worst[pos] < best_val:
            best_val = float(worst[pos])
            best_idx = idx[pos]
    profile = MixedProfile(grid[best_idx])
    achieved = regret_report(game, profile).max_regret
    return SolveResult(
        profile=profile,
        achieved_max_regret=achieved,
        iterations_used=total,
        converged=True,
    )

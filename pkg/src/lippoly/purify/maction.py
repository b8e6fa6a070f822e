"""General-action purification: mixed profile to pure profile in three stages.

The potential here is the sum over players of the payoff variance over
that player's relevant action set (the actions whose payoffs have come
close enough to the top to matter).  Stage 1 moves all probability
sitting on clearly bad actions to the best response, leaving a profile
whose played actions are near-optimal.  Stage 2 sweeps the players in
order; the acting player goes pure on the action minimizing an
aggregated linear coefficient vector b, chosen so the first-order effect
on everyone else's variance is nonpositive, after which every player's
relevant set absorbs any outside action that has climbed to its set
average.  Stage 3 switches every player whose pure regret exceeds the
correction threshold to their best response, all at once.

Variance budgets (initial, per-move, per-addition) and the final regret
bound are asserted as the pipeline runs; a breach raises BoundBreach.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import BoundBreach
from ..game import (
    MixedProfile,
    PureProfile,
    best_response_vector,
    payoff_matrix,
    regret_report,
)
from .common import (
    check_input_regret,
    members,
    record_bound,
    resolve_order,
    support_regret_max,
)


@dataclass
class MActionPurifyTrace:
    """History of the three general-action stages.

    Index k of step_profiles, relevant_sets, payoffs, means, variances,
    and variance_sums describes the state after k sweep steps (k = 0 is
    the sweep input); relevant_sets[k] is one frozenset per player, and
    means/variances are taken over those sets.  step_b[k] is the
    aggregated coefficient vector the (k+1)-th acting player minimized.
    """

    input_profile: MixedProfile | None = None
    precondition_warning: bool = False
    wsne_profile: MixedProfile | None = None
    epsilon0: float | None = None
    epsilon1: float | None = None
    delta0: float | None = None
    delta1: float | None = None
    order: tuple = ()
    step_profiles: list = field(default_factory=list)
    relevant_sets: list = field(default_factory=list)
    payoffs: list = field(default_factory=list)
    means: list = field(default_factory=list)
    variances: list = field(default_factory=list)
    variance_sums: list = field(default_factory=list)
    step_b: list = field(default_factory=list)
    chosen_actions: list = field(default_factory=list)
    move_increase_total: float = 0.0
    addition_increase_total: float = 0.0
    switched_players: tuple = ()
    final_profile: PureProfile | None = None
    final_max_regret: float | None = None
    bounds: dict = field(default_factory=dict)


def thresholds_m(game):
    """(eps0, eps1, delta0): input level, support level, stage-1 cutoff."""
    n, m, lam = game.n, game.m, game.lam
    eps0 = ((m - 1) / m) ** 2 * lam
    delta0 = math.sqrt(2.0 * (n - 1) * lam * eps0)
    eps1 = 2.0 * math.sqrt(2.0 * n * lam * eps0)
    return eps0, eps1, delta0


def ane_to_wsne_m(game, profile):
    """Stage 1: move mass off clearly bad actions, all at once.

    Input must have max regret at most eps0 = ((m-1)/m)^2 * lam (twice
    that tolerated with a warning).  Every action whose regret against
    the input profile exceeds delta0 = sqrt(2 (n-1) lam eps0) loses its
    probability to the owner's best response.  On return every played
    action has regret at most eps1 = 2 sqrt(2 n lam eps0); asserted.
    """
    profile.validate_for(game)
    eps0, eps1, delta0 = thresholds_m(game)
    check_input_regret(game, profile, eps0)

    U = payoff_matrix(game, profile)
    reg = U.max(axis=1, keepdims=True) - U
    br = U.argmax(axis=1)
    probs = profile.probs.copy()
    keep = reg <= delta0
    moved = (probs * ~keep).sum(axis=1)
    probs *= keep
    probs[np.arange(game.n), br] += moved
    out = MixedProfile(probs)

    observed = support_regret_max(game, out)
    if observed > eps1 + 1e-9:
        raise BoundBreach("wsne_support_regret", observed, eps1)
    return out


def purify_rounding_m(game, wsne, order=None):
    """Stage 2: ordered sweep; each player goes pure on the argmin of b.

    The relevant set of a player starts as the actions within eps1 of
    their best payoff.  For the acting player, every other player
    contributes 2 c^T L weighted by one over their set size, where c is
    their set-centered payoff vector with the acting player's influence
    removed and L is the acting player's set-centered influence block;
    the acting player picks the action of their own set minimizing the
    aggregate.  Every set then absorbs, repeatedly, the best outside
    action that reaches the set's running mean.

    Asserts the initial variance budget 2 (n lam (m-1)/m)^2, the
    cumulative move budget ((m-1) n lam / m)^2, the cumulative addition
    budget 4 n lam^2 (log(m-1) + 1), and the terminal variance bound
    8 n^2 lam^2 log(3m).
    """
    wsne.validate_for(game)
    n, m, lam = game.n, game.m, game.lam
    order = resolve_order(n, order)
    eps0, eps1, delta0 = thresholds_m(game)

    trace = MActionPurifyTrace(
        wsne_profile=wsne, order=order, epsilon0=eps0, epsilon1=eps1, delta0=delta0
    )
    record_bound(trace, "wsne_support_regret", support_regret_max(game, wsne), eps1)

    beta = game.beta
    B = np.ascontiguousarray(beta.transpose(0, 2, 1, 3).reshape(n * m, n * m))
    P = wsne.probs.copy()
    u = (B @ P.ravel()).reshape(n, m)
    member = (u.max(axis=1, keepdims=True) - u) <= eps1
    mean, var = _set_stats(u, member)
    vsum = float(var.sum())
    record_bound(trace, "initial_variance", vsum, 2.0 * (n * lam * (m - 1) / m) ** 2)

    _snapshot(trace, P, member, u, mean, var, vsum)
    for actor in order:
        sizes = member.sum(axis=1).astype(float)
        # Acting player's influence on u, to be stripped from the centering.
        own = np.einsum("ajk,k->aj", beta[:, actor], P[actor])
        u_other = u - own
        mean_other = (u_other * member).sum(axis=1) / sizes
        centered = (u_other - mean_other[:, None]) * member
        weights = centered / sizes[:, None]
        weights[actor] = 0.0
        b = 2.0 * np.einsum("aj,ajk->k", weights, beta[:, actor])

        # Own payoffs ignore the own action, so the acting player's set is
        # still the pre-step one; argmin restricted to it, lowest index wins.
        inside = np.flatnonzero(member[actor])
        chosen = int(inside[np.argmin(b[inside])])
        P[actor] = 0.0
        P[actor, chosen] = 1.0
        u = (B @ P.ravel()).reshape(n, m)

        mean, var = _set_stats(u, member)
        moved_sum = float(var.sum())
        trace.move_increase_total += moved_sum - vsum

        member = _grow_sets(u, member)
        mean, var = _set_stats(u, member)
        vsum = float(var.sum())
        trace.addition_increase_total += vsum - moved_sum

        trace.step_b.append(b)
        trace.chosen_actions.append(chosen)
        _snapshot(trace, P, member, u, mean, var, vsum)

    record_bound(
        trace, "move_variance_budget", trace.move_increase_total, ((m - 1) * n * lam / m) ** 2
    )
    record_bound(
        trace,
        "addition_variance_budget",
        trace.addition_increase_total,
        # log here and below is natural; the harmonic-sum bound needs it.
        4.0 * n * lam * lam * (math.log(m - 1) + 1.0),
    )
    record_bound(trace, "terminal_variance", vsum, 8.0 * n * n * lam * lam * math.log(3.0 * m))
    pure = PureProfile(P.argmax(axis=1))
    return pure, trace


def correct_m(game, pure, trace):
    """Stage 3: simultaneous best-response switch above the threshold.

    The threshold is delta1 = 4 lam (n^2 m log 3m)^(1/3); every player
    strictly above it switches, decisions taken against the input pure
    profile.  Asserts the switcher budget 16 n^2 lam^2 m log(3m) /
    delta1^2 and the final regret bound 6 lam (n^2 m log 3m)^(1/3).
    """
    pure.validate_for(game)
    n, m, lam = game.n, game.m, game.lam
    scale = n * n * m * math.log(3.0 * m)
    delta1 = 4.0 * lam * scale ** (1.0 / 3.0)
    trace.delta1 = delta1

    as_mixed = MixedProfile.from_pure(pure, m)
    report = regret_report(game, as_mixed)
    switchers = np.flatnonzero(report.per_player_regret > delta1)
    record_bound(
        trace,
        "switcher_count",
        float(len(switchers)),
        16.0 * n * n * lam * lam * m * math.log(3.0 * m) / (delta1 * delta1),
    )

    actions = pure.actions.copy()
    if len(switchers):
        br = best_response_vector(game, as_mixed)
        actions[switchers] = br[switchers]
    final = PureProfile(actions)
    final_report = regret_report(game, MixedProfile.from_pure(final, m))
    record_bound(trace, "final_regret", final_report.max_regret, 6.0 * lam * scale ** (1.0 / 3.0))

    trace.switched_players = tuple(int(i) for i in switchers)
    trace.final_profile = final
    trace.final_max_regret = float(final_report.max_regret)
    return final


def _set_stats(u, member):
    """Per-player mean and population variance over the member actions."""
    count = member.sum(axis=1).astype(float)
    mean = (u * member).sum(axis=1) / count
    dev = (u - mean[:, None]) * member
    var = (dev * dev).sum(axis=1) / count
    return mean, var


def _grow_sets(u, member):
    """Absorb outside actions that reach their set's running mean.

    Per player: while the best action outside the set has payoff >= the
    set mean, add it (lowest index on ties) and recompute the mean.
    Mutates and returns the membership mask.
    """
    mean = (u * member).sum(axis=1) / member.sum(axis=1)
    outside_best = np.where(member, -np.inf, u).max(axis=1)
    for a in np.flatnonzero(outside_best >= mean):
        row = u[a]
        mask = member[a]
        k = int(mask.sum())
        total = float(row[mask].sum())
        while k < mask.size:
            outside = np.flatnonzero(~mask)
            j = int(outside[np.argmax(row[outside])])
            if row[j] >= total / k:
                mask[j] = True
                total += float(row[j])
                k += 1
            else:
                break
    return member


def _snapshot(trace, P, member, u, mean, var, vsum):
    trace.step_profiles.append(MixedProfile(P.copy()))
    trace.relevant_sets.append(tuple(members(row) for row in member))
    trace.payoffs.append(u.copy())
    trace.means.append(mean.copy())
    trace.variances.append(var.copy())
    trace.variance_sums.append(vsum)

"""Polymatrix games with a Lipschitz budget: representation and evaluation.

A game couples every ordered pair of distinct players (i, ip) through an
m x m coefficient block beta[i][ip]; player i's payoff for an action is the
sum of the blocks' entries selected by the opponents' actions.  The declared
parameter lam bounds how much any single opponent's choice can move any
payoff entry, and a validity scan keeps total payoffs inside [0, 1].

All player/action indices are 0-based in code; the JSON wire format is
1-based.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .errors import BinaryOnlyError, DistributionError, InternalError, UsageError

# Absolute tolerance for every comparison against an analytic bound.
BOUND_TOL = 1e-9
# Mixed rows must sum to 1 within this tolerance.
ROW_SUM_TOL = 1e-9
# Computed regrets below this floor indicate an arithmetic bug.
REGRET_FLOOR = -1e-12


def _freeze(arr):
    arr = np.asarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PolymatrixGame:
    """Immutable n-player, m-action polymatrix game.

    Fields
    ------
    n : int
        Player count (>= 1).
    m : int
        Actions per player (>= 2, uniform).
    beta : ndarray, shape (n, n, m, m)
        Pairwise payoff coefficients; beta[i, ip, j, jp] is the contribution
        to player i playing j when player ip plays jp.  Diagonal blocks
        (i == ip) are forced to zero and never read.
    lam : float
        Declared Lipschitz parameter, in (0, 1].
    """

    n: int
    m: int
    beta: np.ndarray
    lam: float

    def __post_init__(self):
        if self.n < 1:
            raise UsageError(f"player count must be >= 1, got {self.n}")
        if self.m < 2:
            raise UsageError(f"action count must be >= 2, got {self.m}")
        if not (0.0 < self.lam <= 1.0):
            raise UsageError(f"Lipschitz parameter must be in (0, 1], got {self.lam}")
        beta = np.array(self.beta, dtype=np.float64)
        if beta.shape != (self.n, self.n, self.m, self.m):
            raise UsageError(
                f"coefficient array must have shape {(self.n, self.n, self.m, self.m)}, "
                f"got {beta.shape}"
            )
        idx = np.arange(self.n)
        beta[idx, idx] = 0.0
        object.__setattr__(self, "beta", _freeze(beta))
        object.__setattr__(self, "lam", float(self.lam))


@dataclass(frozen=True)
class PureProfile:
    """One action index per player."""

    actions: np.ndarray

    def __post_init__(self):
        actions = np.asarray(self.actions)
        if actions.ndim != 1:
            raise UsageError("pure profile must be a flat vector of action indices")
        if actions.size and not np.issubdtype(actions.dtype, np.integer):
            rounded = np.rint(actions)
            if not np.array_equal(rounded, actions):
                raise UsageError("pure profile entries must be integers")
            actions = rounded.astype(np.int64)
        object.__setattr__(self, "actions", _freeze(actions.astype(np.int64)))

    @property
    def n(self):
        return self.actions.size

    def validate_for(self, game):
        if self.n != game.n:
            raise UsageError(f"profile has {self.n} entries, game has {game.n} players")
        if self.n and (self.actions.min() < 0 or self.actions.max() >= game.m):
            bad = int(np.argmax((self.actions < 0) | (self.actions >= game.m)))
            raise UsageError(
                f"player {bad} action {self.actions[bad]} out of range [0, {game.m})"
            )


@dataclass(frozen=True)
class MixedProfile:
    """One probability distribution over actions per player (rows of probs)."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=np.float64)
        if probs.ndim != 2:
            raise UsageError("mixed profile must be an (n, m) probability matrix")
        if probs.size:
            if probs.min() < -ROW_SUM_TOL:
                i, j = np.unravel_index(int(np.argmin(probs)), probs.shape)
                raise DistributionError(
                    f"player {i} assigns negative probability {probs[i, j]:.3g} to action {j}"
                )
            sums = probs.sum(axis=1)
            off = np.abs(sums - 1.0)
            if off.max() > ROW_SUM_TOL:
                i = int(np.argmax(off))
                raise DistributionError(
                    f"player {i} row sums to {sums[i]:.12g}, off by more than {ROW_SUM_TOL}"
                )
        object.__setattr__(self, "probs", _freeze(probs))

    @property
    def n(self):
        return self.probs.shape[0]

    @property
    def m(self):
        return self.probs.shape[1]

    @classmethod
    def from_pure(cls, pure, m):
        probs = np.zeros((pure.n, m))
        probs[np.arange(pure.n), pure.actions] = 1.0
        return cls(probs)

    def is_pure_valued(self):
        """True iff every row puts (up to tolerance) all mass on one action."""
        return bool(self.probs.size == 0 or self.probs.max(axis=1).min() >= 1.0 - ROW_SUM_TOL)

    def to_pure(self):
        if not self.is_pure_valued():
            raise UsageError("profile is not pure-valued")
        return PureProfile(np.argmax(self.probs, axis=1))

    def validate_for(self, game):
        if self.probs.shape != (game.n, game.m):
            raise UsageError(
                f"profile shape {self.probs.shape} does not match game ({game.n}, {game.m})"
            )


@dataclass(frozen=True)
class LipschitzWitness:
    """Two pure profiles showing a payoff jump beyond the declared budget.

    The profiles agree at `player` (the payoff recipient) and differ only at
    other coordinates; `allowed_gap` is lam times that Hamming distance.
    """

    player: int
    profile_a: PureProfile
    profile_b: PureProfile
    observed_gap: float
    allowed_gap: float


@dataclass(frozen=True)
class RegretReport:
    per_player_regret: np.ndarray
    max_regret: float
    argmax_player: int


@dataclass(frozen=True)
class Valid:
    """check_game outcome: both scans passed."""


@dataclass(frozen=True)
class RangeViolation:
    """check_game outcome: a payoff-range inequality failed.

    direction is "upper" (sum of per-opponent maxima above 1) or "lower"
    (sum of per-opponent minima below 0) for the named player/action row.
    """

    player: int
    action: int
    direction: str


@dataclass(frozen=True)
class LipschitzViolation:
    """check_game outcome: a coefficient gap exceeds lam; carries the witness."""

    witness: LipschitzWitness


def pure_payoff(game, i, j, others):
    """Payoff to player i for action j against a pure profile.

    Entry i of `others` is ignored (a player contributes nothing to their own
    payoff).  Cost O(n).
    """
    _validate_indices(game, i, j)
    others.validate_for(game)
    cols = game.beta[i, np.arange(game.n), j, others.actions]
    return float(cols.sum())


def mixed_payoff(game, i, j, others):
    """Expected payoff to player i for action j against a mixed profile.

    Exactly linear in each opponent's distribution; cost O(nm).
    """
    _validate_indices(game, i, j)
    others.validate_for(game)
    return float((game.beta[i, :, j, :] * others.probs).sum())


def payoff_vector(game, i, profile):
    """All m action payoffs for player i at once; cost O(nm^2)."""
    _validate_indices(game, i, 0)
    profile.validate_for(game)
    return np.tensordot(game.beta[i], profile.probs, axes=([0, 2], [0, 1]))


def payoff_matrix(game, profile):
    """The (n, m) matrix of every player's action payoffs; cost O(n^2 m^2)."""
    profile.validate_for(game)
    return np.einsum("abcd,bd->ac", game.beta, profile.probs)


def expected_payoff(game, i, profile):
    """Player i's expected payoff when everyone (i included) plays `profile`."""
    return float(payoff_vector(game, i, profile) @ profile.probs[i])


def regret(game, i, profile):
    """Best-response payoff minus realized payoff for player i; >= 0."""
    vec = payoff_vector(game, i, profile)
    value = float(vec.max() - vec @ profile.probs[i])
    return _clamp_regret(value)


def regret_report(game, profile):
    """Per-player regrets in one pass, with the (lowest-index) arg max."""
    U = payoff_matrix(game, profile)
    per = U.max(axis=1) - (U * profile.probs).sum(axis=1)
    if per.size and per.min() < REGRET_FLOOR:
        raise InternalError(
            f"regret {per.min():.3g} below floor {REGRET_FLOOR}; evaluation is broken"
        )
    per = np.maximum(per, 0.0)
    top = int(np.argmax(per)) if per.size else 0
    return RegretReport(_freeze(per), float(per[top]) if per.size else 0.0, top)


def action_regrets(game, profile):
    """The (n, m) matrix of per-action regrets: best payoff minus each action's."""
    U = payoff_matrix(game, profile)
    return U.max(axis=1, keepdims=True) - U


def discrepancy(game, i, profile):
    """Signed payoff gap, action index 1 minus action index 0 (binary games)."""
    if game.m != 2:
        raise BinaryOnlyError(f"discrepancy requires a binary game, m={game.m}")
    vec = payoff_vector(game, i, profile)
    return float(vec[1] - vec[0])


def discrepancy_vector(game, profile):
    """All players' discrepancies at once (binary games)."""
    if game.m != 2:
        raise BinaryOnlyError(f"discrepancy requires a binary game, m={game.m}")
    U = payoff_matrix(game, profile)
    return U[:, 1] - U[:, 0]


def best_response(game, i, profile):
    """Arg max action for player i; ties broken by lowest index."""
    vec = payoff_vector(game, i, profile)
    return int(np.argmax(vec))


def best_response_vector(game, profile):
    U = payoff_matrix(game, profile)
    return np.argmax(U, axis=1)


def check_game(game):
    """Scan coefficients for Lipschitz consistency and payoff range.

    The Lipschitz scan compares, within every off-diagonal block row, the
    spread across the opponent's actions (n^2 m^3-style comparisons done as a
    max-minus-min sweep); a violation synthesizes a canonical witness pair:
    player i fixed to j, everyone else on action 0, the two profiles
    differing only at the offending opponent.  The range scan checks the 2nm
    inequalities sum-of-max <= 1 and sum-of-min >= 0.
    """
    beta = game.beta
    n, m = game.n, game.m
    hi = beta.max(axis=3)
    lo = beta.min(axis=3)
    spread = hi - lo
    idx = np.arange(n)
    spread[idx, idx] = 0.0
    worst = float(spread.max()) if spread.size else 0.0
    if worst > game.lam + BOUND_TOL:
        i, ip, j = np.unravel_index(int(np.argmax(spread)), spread.shape)
        j_hi = int(np.argmax(beta[i, ip, j]))
        j_lo = int(np.argmin(beta[i, ip, j]))
        base = np.zeros(n, dtype=np.int64)
        base[i] = j
        a = base.copy()
        a[ip] = j_hi
        b = base.copy()
        b[ip] = j_lo
        profile_a = PureProfile(a)
        profile_b = PureProfile(b)
        observed = abs(pure_payoff(game, int(i), int(j), profile_a)
                       - pure_payoff(game, int(i), int(j), profile_b))
        witness = LipschitzWitness(
            player=int(i),
            profile_a=profile_a,
            profile_b=profile_b,
            observed_gap=observed,
            allowed_gap=game.lam * 1.0,
        )
        return LipschitzViolation(witness)

    mask = np.ones((n, n), dtype=bool)
    mask[idx, idx] = False
    upper = np.where(mask[:, :, None], hi, 0.0).sum(axis=1)
    lower = np.where(mask[:, :, None], lo, 0.0).sum(axis=1)
    if upper.size and upper.max() > 1.0 + BOUND_TOL:
        i, j = np.unravel_index(int(np.argmax(upper)), upper.shape)
        return RangeViolation(player=int(i), action=int(j), direction="upper")
    if lower.size and lower.min() < -BOUND_TOL:
        i, j = np.unravel_index(int(np.argmin(lower)), lower.shape)
        return RangeViolation(player=int(i), action=int(j), direction="lower")
    return Valid()


def total_variation(p, q):
    """Total variation distance between two discrete distributions."""
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def _validate_indices(game, i, j):
    if not (0 <= i < game.n):
        raise UsageError(f"player index {i} out of range [0, {game.n})")
    if not (0 <= j < game.m):
        raise UsageError(f"action index {j} out of range [0, {game.m})")


def _clamp_regret(value):
    if value < REGRET_FLOOR:
        raise InternalError(
            f"regret {value:.3g} below floor {REGRET_FLOOR}; evaluation is broken"
        )
    return max(value, 0.0)


# ---------------------------------------------------------------------------
# JSON wire format (1-based indices)

def game_to_json(game):
    blocks = []
    for i in range(game.n):
        for ip in range(game.n):
            if i == ip:
                continue
            block = game.beta[i, ip]
            if np.any(block != 0.0):
                blocks.append({
                    "i": i + 1,
                    "ip": ip + 1,
                    "matrix": [[float(x) for x in row] for row in block],
                })
    return {"n": game.n, "m": game.m, "lambda": game.lam, "beta": blocks}


def game_from_json(data):
    try:
        n = int(data["n"])
        m = int(data["m"])
        lam = float(data["lambda"])
        raw_blocks = data.get("beta", [])
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"malformed game JSON: {exc}") from exc
    beta = np.zeros((n, n, m, m))
    for entry in raw_blocks:
        i = int(entry["i"]) - 1
        ip = int(entry["ip"]) - 1
        if not (0 <= i < n and 0 <= ip < n) or i == ip:
            raise UsageError(f"block ({entry['i']}, {entry['ip']}) out of range")
        matrix = np.asarray(entry["matrix"], dtype=np.float64)
        if matrix.shape != (m, m):
            raise UsageError(
                f"block ({entry['i']}, {entry['ip']}) has shape {matrix.shape}, want ({m}, {m})"
            )
        beta[i, ip] = matrix
    return PolymatrixGame(n=n, m=m, beta=beta, lam=lam)


def profile_to_json(profile):
    if isinstance(profile, PureProfile):
        return {"pure": [int(a) + 1 for a in profile.actions]}
    return {"mixed": [[float(x) for x in row] for row in profile.probs]}


def profile_from_json(data):
    if "pure" in data:
        return PureProfile(np.asarray(data["pure"], dtype=np.int64) - 1)
    if "mixed" in data:
        return MixedProfile(np.asarray(data["mixed"], dtype=np.float64))
    raise UsageError('profile JSON needs a "pure" or "mixed" key')


def canonical_bytes(obj):
    """Deterministic JSON encoding used for digests and byte-compare tests."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def game_digest(game):
    return hashlib.sha256(canonical_bytes(game_to_json(game))).hexdigest()[:16]


def load_game(path):
    with open(path) as fh:
        return game_from_json(json.load(fh))


def save_game(game, path):
    with open(path, "w") as fh:
        json.dump(game_to_json(game), fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")

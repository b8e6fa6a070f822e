"""Helpers shared by the two purification pipelines."""

from __future__ import annotations

import warnings

import numpy as np

from ..errors import BoundBreach, PreconditionViolation, UsageError
from ..game import BOUND_TOL, action_regrets, regret_report


def record_bound(trace, name, observed, allowed, context=""):
    """Log a bound check in the trace; raise if it failed."""
    ok = observed <= allowed + BOUND_TOL
    trace.bounds[name] = {
        "observed": float(observed),
        "allowed": float(allowed),
        "ok": bool(ok),
    }
    if not ok:
        raise BoundBreach(name, observed, allowed, context=context)


def check_input_regret(game, profile, required):
    """Enforce the pipeline's input regret level.

    Clean inputs pass silently.  Inputs within twice the required level get
    a warning and a True return (callers record it in the trace), so bound
    slack can be explored without forging inputs.  Anything worse raises.
    """
    report = regret_report(game, profile)
    measured = report.max_regret
    if measured <= required + 1e-9:
        return False
    if measured <= 2.0 * required + 1e-9:
        warnings.warn(
            f"input max regret {measured:.6g} exceeds the required "
            f"{required:.6g} but is within twice it; continuing",
            RuntimeWarning,
            stacklevel=3,
        )
        return True
    raise PreconditionViolation(report.argmax_player, measured, required)


def support_regret_max(game, profile):
    """Largest regret of any action actually played (probability > 0)."""
    reg = action_regrets(game, profile)
    on_support = profile.probs > 0.0
    if not on_support.any():
        return 0.0
    return float(reg[on_support].max())


def resolve_order(n, order):
    """Normalize the sweep order: default ascending, else a permutation."""
    if order is None:
        return tuple(range(n))
    out = tuple(int(i) for i in order)
    if sorted(out) != list(range(n)):
        raise UsageError(f"order must be a permutation of 0..{n - 1}, got {order!r}")
    return out


def members(mask):
    """Frozen index set for a boolean membership row."""
    return frozenset(int(i) for i in np.flatnonzero(mask))

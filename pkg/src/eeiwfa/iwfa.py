"""Totally asynchronous iterative waterfilling.

Each player periodically replaces its covariance by its EE best response
computed from possibly outdated interference measurements. Update schedules
(sequential round-robin, synchronous, Bernoulli-asynchronous with bounded
measurement delays) are drawn deterministically from a seed; the engine
keeps a ring buffer of recent profiles so delayed measurements index real
past states.
"""

import csv
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .best_response import DinkelbachConfig, best_response
from .errors import ConvergenceError, InvalidInputError
from .linalg import W_FLOOR, spectral_radius
from .model import StrategyProfile, energy_efficiency

SUSTAIN_SLOTS = 5        # consecutive below-tolerance slots before stopping
OSC_WINDOW = 50          # residual history inspected for periodic recurrence
OSC_MAX_PERIOD = 8
OSC_REL_TOL = 1e-6


@dataclass
class UpdateSchedule:
    """When players update and how stale their measurements are.

    sequential: player (t mod Q) updates at slot t, zero delay.
    synchronous: every player updates every slot, zero delay.
    asynchronous: player q updates with probability rho[q] per slot and
    measures player r with a uniform integer age in [0, d_max].
    """

    mode: str
    Q: int
    rho: np.ndarray | None = None
    d_max: int = 0
    seed: int | None = None

    def draw_slot(self, t, rng):
        """Update mask and per-pair measurement ages for slot ``t``.

        Draws are made for every player every slot so the stream consumed
        from ``rng`` does not depend on the trajectory.
        """
        if self.mode == "sequential":
            mask = np.zeros(self.Q, dtype=bool)
            mask[t % self.Q] = True
            return mask, np.zeros((self.Q, self.Q), dtype=int)
        if self.mode == "synchronous":
            return np.ones(self.Q, dtype=bool), np.zeros((self.Q, self.Q), dtype=int)
        mask = rng.random(self.Q) < self.rho
        ages = rng.integers(0, self.d_max + 1, size=(self.Q, self.Q))
        return mask, ages


def make_schedule(mode, Q, params=None, seed=None):
    """Build an update schedule.

    ``params`` is only consulted for the asynchronous mode: ``rho`` (scalar
    or per-player, in (0, 1]) and ``d_max`` (>= 0). A starved player
    (rho = 0) is rejected because it would never update.
    """
    params = dict(params or {})
    if mode in ("sequential", "synchronous"):
        return UpdateSchedule(mode=mode, Q=Q, seed=seed)
    if mode != "asynchronous":
        raise InvalidInputError(f"unknown schedule mode {mode!r}")
    rho = np.broadcast_to(
        np.asarray(params.get("rho", 0.5), dtype=float), (Q,)
    ).copy()
    if np.any(rho <= 0.0) or np.any(rho > 1.0):
        raise InvalidInputError("update probabilities must lie in (0, 1]")
    d_max = int(params.get("d_max", 0))
    if d_max < 0:
        raise InvalidInputError("d_max must be >= 0")
    return UpdateSchedule(mode=mode, Q=Q, rho=rho, d_max=d_max, seed=seed)


def block_max_distance(pa, pb, w):
    """max_q ||Qbar_q - Qbar'_q||_F / w_q."""
    return max(
        float(np.linalg.norm(a - b, "fro")) / w[q]
        for q, (a, b) in enumerate(zip(pa, pb))
    )


def default_weights(s):
    """Perron weights of the interference matrix; all-ones when the reduced
    channels are not square (no exact interference matrix there)."""
    from .equilibrium import interference_matrix_square

    try:
        S = interference_matrix_square(s)
    except InvalidInputError:
        return np.ones(s.Q)
    _, w, _ = spectral_radius(S.S)
    return np.maximum(w, W_FLOOR)


@dataclass
class IwfaTrace:
    """Per-slot record of one simulation run (slot 1 is the first update)."""

    slots: np.ndarray
    ee: np.ndarray               # (T, Q)
    block_residual: np.ndarray   # (T,)
    ne_residual: np.ndarray      # (T,), nan where not evaluated
    updated: np.ndarray          # (T, Q) bool
    weights: np.ndarray
    termination: str             # converged | max_slots | oscillating | error
    final_profile: StrategyProfile
    snapshots: dict = field(default_factory=dict)
    error: str | None = None
    meta: dict = field(default_factory=dict)


def ne_residual(s, profile, cfg=None):
    """max_q ||Qbar_q - BR_q(Qbar_{-q})||_F; ~0 exactly at an equilibrium."""
    cfg = cfg or DinkelbachConfig()
    worst = 0.0
    for q in range(s.Q):
        br = best_response(s, q, profile, cfg)
        worst = max(worst, float(np.linalg.norm(profile[q] - br.Qbr, "fro")))
    return worst


def _oscillating(residuals, tol):
    if len(residuals) < OSC_WINDOW:
        return False
    win = np.asarray(residuals[-OSC_WINDOW:])
    if win.min() <= tol or not np.all(np.isfinite(win)):
        return False
    scale = float(win.max())
    if scale <= 0.0:
        return False
    half = OSC_WINDOW // 2
    trending_down = win[half:].mean() < 0.95 * win[:half].mean()
    if trending_down:
        return False
    for k in range(1, OSC_MAX_PERIOD + 1):
        if np.abs(win[k:] - win[:-k]).max() <= OSC_REL_TOL * scale:
            return True
    return False


def run_iwfa(s, schedule, init=None, max_slots=1000, residual_tol=1e-9,
             cfg=None, seed=0, weights=None, ne_every=1, snapshot_every=0):
    """Simulate the asynchronous EE waterfilling game.

    At every slot the scheduled players recompute their best response
    against the (possibly delayed) measured profile while the others hold.
    The run stops when the weighted block-max difference between
    consecutive profiles stays below ``residual_tol`` for 5 slots, when a
    periodic residual recurrence with no downward trend is detected
    ("oscillating"), or at ``max_slots``. Fully deterministic given the
    seeds (the schedule's own seed wins over ``seed`` when set).

    ``ne_every`` controls how often the equilibrium residual is evaluated
    (0 = final slot only); ``snapshot_every`` thins stored profile
    snapshots (0 = none).
    """
    cfg = cfg or DinkelbachConfig()
    profile = init.copy() if init is not None else StrategyProfile.uniform(s)
    profile.validate(s)
    w = np.asarray(weights, dtype=float) if weights is not None else default_weights(s)
    if w.shape != (s.Q,) or np.any(w <= 0):
        raise InvalidInputError("weights must be Q positive numbers")
    rng = np.random.default_rng(schedule.seed if schedule.seed is not None else seed)

    history = deque(maxlen=schedule.d_max + 1)
    history.append(profile)
    slots, ees, residuals, nes, upds = [], [], [], [], []
    snapshots = {}
    termination = "max_slots"
    error = None
    streak = 0

    for t in range(max_slots):
        mask, ages = schedule.draw_slot(t, rng)
        new_mats = list(profile.mats)
        try:
            for q in range(s.Q):
                if not mask[q]:
                    continue
                measured = list(profile.mats)
                for r in range(s.Q):
                    if r == q:
                        continue
                    tau = max(t - int(ages[q, r]), 0)
                    idx = tau - t + len(history) - 1
                    measured[r] = history[idx][r]
                br = best_response(s, q, StrategyProfile(measured), cfg)
                new_mats[q] = br.Qbr
        except ConvergenceError as exc:
            termination = "error"
            error = str(exc)
            break
        new_profile = StrategyProfile(new_mats)
        slot = t + 1
        r_t = block_max_distance(new_profile, profile, w)
        slots.append(slot)
        residuals.append(r_t)
        ees.append([energy_efficiency(s, q, new_profile) for q in range(s.Q)])
        if ne_every and slot % ne_every == 0:
            nes.append(ne_residual(s, new_profile, cfg))
        else:
            nes.append(float("nan"))
        upds.append(mask.copy())
        if snapshot_every and slot % snapshot_every == 0:
            snapshots[slot] = new_profile.copy()
        history.append(new_profile)
        profile = new_profile

        # quiet asynchronous slots (nobody updated) have zero residual by
        # construction; they must not advance the convergence streak
        if mask.any():
            streak = streak + 1 if r_t <= residual_tol else 0
        if streak >= SUSTAIN_SLOTS:
            termination = "converged"
            break
        if _oscillating(residuals, residual_tol):
            termination = "oscillating"
            break

    if nes and np.isnan(nes[-1]) and termination != "error":
        nes[-1] = ne_residual(s, profile, cfg)
    return IwfaTrace(
        slots=np.asarray(slots, dtype=int),
        ee=np.asarray(ees, dtype=float).reshape(len(slots), s.Q),
        block_residual=np.asarray(residuals, dtype=float),
        ne_residual=np.asarray(nes, dtype=float),
        updated=np.asarray(upds, dtype=bool).reshape(len(slots), s.Q),
        weights=w,
        termination=termination,
        final_profile=profile,
        snapshots=snapshots,
        error=error,
        meta={"mode": schedule.mode, "residual_tol": residual_tol,
              "max_slots": max_slots},
    )


def write_trace_csv(trace, path, thin=1):
    """Write a trace as CSV rows (slot, player, ee, block_residual,
    ne_residual, updated_flag), keeping every ``thin``-th slot plus the last."""
    if thin < 1:
        raise InvalidInputError("thin must be >= 1")
    n = len(trace.slots)
    with open(path, "w", newline="") as fh:
        fh.write("# eeiwfa trace schema v1\n")
        writer = csv.writer(fh)
        writer.writerow(
            ["slot", "player", "ee", "block_residual", "ne_residual", "updated_flag"]
        )
        for i in range(n):
            if i % thin and i != n - 1:
                continue
            slot = int(trace.slots[i])
            for q in range(trace.ee.shape[1]):
                writer.writerow([
                    slot, q, repr(float(trace.ee[i, q])),
                    repr(float(trace.block_residual[i])),
                    repr(float(trace.ne_residual[i])),
                    int(trace.updated[i, q]),
                ])

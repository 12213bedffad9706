"""The discrete GD map, trajectory generation, the probability-space
recurrence, and orbit stability diagnostics.

The map under study is T(w) = w - eta * grad L(w) with a constant step size.
Trajectories subsample their history but always keep a dense window of the
most recent iterates so that cycle detection and spectral analysis can see
consecutive steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .objective import Objective, Solution, lambda_max

__all__ = [
    "GDConfig",
    "Trajectory",
    "resolve_eta",
    "gd_step",
    "step_many",
    "run",
    "probs_from_weights",
    "prob_step",
    "run_prob",
    "orbit_multiplier",
    "lyapunov",
]

DIVERGENCE_NORM = 1e12
DEFAULT_TAIL_WINDOW = 4096
_PROB_CLAMP_LO = 1e-300


def resolve_eta(
    eta: Optional[float] = None,
    gamma: Optional[float] = None,
    ref: str = "lambda",
    solution: Optional[Solution] = None,
) -> float:
    """Turn an absolute step size or a (gamma, reference) pair into eta.

    ref="lambda" gives gamma / lambda_star, ref="two-L" gives gamma * (2/L).
    """
    if (eta is None) == (gamma is None):
        raise ValueError("exactly one of eta and gamma must be given")
    if eta is None:
        if solution is None:
            raise ValueError("gamma-relative step sizes need a Solution")
        if ref == "lambda":
            eta = gamma / solution.lambda_star
        elif ref == "two-L":
            eta = gamma * solution.eta_two_L
        else:
            raise ValueError("ref must be 'lambda' or 'two-L'")
    eta = float(eta)
    if not np.isfinite(eta) or eta <= 0.0:
        raise ValueError(f"step size must resolve to a positive finite real, got {eta}")
    return eta


@dataclass
class GDConfig:
    """Run configuration: step-size spec, length, and recording policy."""

    w0: np.ndarray
    max_iters: int
    eta: Optional[float] = None
    gamma: Optional[float] = None
    ref: str = "lambda"
    record_every: int = 1
    tail_window: int = DEFAULT_TAIL_WINDOW

    def __post_init__(self):
        self.w0 = np.atleast_1d(np.asarray(self.w0, dtype=float))
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.record_every < 1:
            raise ValueError("record_every must be positive")


@dataclass(frozen=True)
class Trajectory:
    """Recorded GD iterates.

    ``times`` holds the iteration index of each recorded row.  The final
    ``tail_window`` iterates are always recorded densely regardless of
    ``record_every``; ``dense_tail()`` returns that consecutive block.
    """

    times: np.ndarray
    iterates: np.ndarray
    losses: np.ndarray
    eta: float
    diverged: bool
    record_every: int
    tail_window: int
    max_iters: int

    @property
    def dim(self) -> int:
        return self.iterates.shape[1]

    def _dense_from(self) -> int:
        t = self.times
        if len(t) < 2:
            return 0
        steps = np.diff(t)
        idx = len(steps)
        while idx > 0 and steps[idx - 1] == 1:
            idx -= 1
        return idx

    def dense_tail(self) -> np.ndarray:
        """Longest consecutive-in-t block ending at the last iterate."""
        return self.iterates[self._dense_from():]

    def dense_tail_losses(self) -> np.ndarray:
        return self.losses[self._dense_from():]


def gd_step(obj: Objective, w: np.ndarray, eta: float) -> np.ndarray:
    """One step of the GD map T(w) = w - eta * grad L(w)."""
    if eta <= 0.0:
        raise ValueError("eta must be positive")
    out = np.asarray(w, dtype=float) - eta * obj.gradient(w)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite GD step")
    return out


def step_many(obj: Objective, W: np.ndarray, eta: float) -> np.ndarray:
    """Vectorized gd_step over the rows of W, shape (m, d)."""
    Z = W @ obj._A.T                       # margins per row
    P = obj.loss.d1(Z) * obj._wts
    return W - eta * (P @ obj._A)


def run(obj: Objective, cfg: GDConfig, solution: Optional[Solution] = None) -> Trajectory:
    """Iterate the GD map for cfg.max_iters steps, recording per the config.

    Divergence (sup-norm above 1e12) truncates the run and sets the flag
    instead of raising: step-size sweeps must tolerate diverging cells.
    """
    eta = resolve_eta(cfg.eta, cfg.gamma, cfg.ref, solution)
    T = cfg.max_iters
    dense_from_t = max(0, T - cfg.tail_window + 1)
    t_all = np.arange(T + 1)
    rec_mask = (t_all % cfg.record_every == 0) | (t_all >= dense_from_t)
    rec_times = t_all[rec_mask]
    n_rec = len(rec_times)

    A = obj._A
    wts = obj._wts
    loss = obj.loss
    w = cfg.w0.astype(float).copy()
    if w.shape != (obj.dim,):
        raise ValueError(f"w0 has shape {w.shape}, expected ({obj.dim},)")

    iterates = np.empty((n_rec, obj.dim))
    losses = np.empty(n_rec)
    rec_idx = 0
    next_rec = rec_times[0]
    diverged = False
    for t in range(T + 1):
        if t == next_rec:
            z = A @ w
            iterates[rec_idx] = w
            losses[rec_idx] = wts @ loss.f(z)
            rec_idx += 1
            next_rec = rec_times[rec_idx] if rec_idx < n_rec else -1
        else:
            z = A @ w
        if t == T:
            break
        g = A.T @ (wts * loss.d1(z))
        w = w - eta * g
        if np.max(np.abs(w)) > DIVERGENCE_NORM:
            diverged = True
            break

    return Trajectory(
        times=rec_times[:rec_idx],
        iterates=iterates[:rec_idx],
        losses=losses[:rec_idx],
        eta=eta,
        diverged=diverged,
        record_every=cfg.record_every,
        tail_window=cfg.tail_window,
        max_iters=T,
    )


# ---------------------------------------------------------------------------
# Probability-space recurrence (logistic loss only)
# ---------------------------------------------------------------------------

def _require_logistic(obj: Objective):
    if obj.loss.name != "logistic":
        raise TypeError("the probability-space recurrence is specific to the logistic loss")


def _sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def probs_from_weights(obj: Objective, w: np.ndarray) -> np.ndarray:
    """Per-group probabilities p_i = sigma(-y_i w.x_i)."""
    _require_logistic(obj)
    return _sigmoid(obj.margins(w))


def prob_step(obj: Objective, p: np.ndarray, eta: float) -> np.ndarray:
    """One step of the per-example probability recurrence,

        p'_i = sigma( logit(p_i) - (eta/N) y_i (sum_j c_j y_j p_j x_j) . x_i ).

    The update only touches the data through the group Gram matrix, which the
    objective caches.  Entries that have collapsed to exactly 0 or 1 make the
    logit overflow; clamp (see run_prob) before calling when iterating hard.
    """
    _require_logistic(obj)
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise ValueError("probabilities must lie strictly inside (0, 1)")
    logit = np.log(p) - np.log1p(-p)
    drive = obj.gram @ (obj.ds.counts * p) / obj.ds.total_count
    return _sigmoid(logit - eta * drive)


def run_prob(obj: Objective, p0: np.ndarray, eta: float, iters: int) -> np.ndarray:
    """Iterate prob_step, clamping into the representable open interval each
    step.  Returns the (iters+1, G) sequence including p0."""
    p = np.asarray(p0, dtype=float).copy()
    hi = 1.0 - np.finfo(float).epsneg  # largest float strictly below 1
    out = np.empty((iters + 1, len(p)))
    out[0] = p
    for t in range(1, iters + 1):
        p = np.clip(p, _PROB_CLAMP_LO, hi)
        p = prob_step(obj, p, eta)
        out[t] = p
    return out


# ---------------------------------------------------------------------------
# Orbit stability diagnostics
# ---------------------------------------------------------------------------

def orbit_multiplier(obj: Objective, orbit, eta: float) -> float:
    """Spectral radius of the product of GD-map Jacobians I - eta H(w) along
    an orbit.  Below 1 the orbit is locally attracting; 1 is neutral."""
    orbit = np.atleast_2d(np.asarray(orbit, dtype=float))
    if orbit.shape[0] == 0:
        raise ValueError("orbit must be nonempty")
    if obj.dim == 1:
        prod = 1.0
        for w in orbit:
            prod *= 1.0 - eta * float(obj.hessian(w)[0, 0])
        return abs(prod)
    m = np.eye(obj.dim)
    for w in orbit:
        m = (np.eye(obj.dim) - eta * obj.hessian(w)) @ m
    return float(np.max(np.abs(np.linalg.eigvals(m))))


def _lyapunov_from_states(obj: Objective, states: np.ndarray, eta: float) -> float:
    states = np.atleast_2d(states)
    if obj.dim == 1:
        d2 = np.array([obj.hessian(w)[0, 0] for w in states])
        vals = np.abs(1.0 - eta * d2)
        vals = np.maximum(vals, 1e-300)
        return float(np.mean(np.log(vals)))
    v = np.ones(obj.dim) / np.sqrt(obj.dim)
    acc = 0.0
    for w in states:
        v = v - eta * (obj.hessian(w) @ v)
        s = float(np.linalg.norm(v))
        if s == 0.0:
            return -np.inf
        acc += np.log(s)
        v /= s
    return acc / len(states)


def lyapunov(obj: Objective, traj: Trajectory, eta: float, burn_in: int) -> float:
    """Average log expansion rate along a recorded trajectory.

    In 1D this is the mean of log|1 - eta L''(w_t)| after the burn-in; in
    higher dimensions a unit tangent vector is pushed through the Jacobians
    with renormalization.  Requires dense recording so consecutive states are
    available.
    """
    if traj.record_every != 1:
        raise ValueError("lyapunov needs a densely recorded trajectory (record_every=1)")
    if len(traj.iterates) < burn_in + 1000:
        raise ValueError("trajectory too short for the requested burn-in")
    return _lyapunov_from_states(obj, traj.iterates[burn_in:], eta)

"""Per-example scalar losses and numerical audits of their structural properties.

The dynamics in this package only rely on a handful of structural facts about
the per-example loss: strict convexity, vanishing left tail, derivative
bounded by 1, and a second derivative that peaks at 0 and decays fast in the
tails.  ``verify_assumption_profile`` certifies those facts on a grid; the two
shipped losses (logistic and squareplus) both pass it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "ScalarLoss",
    "CheckResult",
    "AssumptionReport",
    "logistic",
    "squareplus",
    "get_loss",
    "LOSS_NAMES",
    "verify_assumption1",
    "relu_limit_gap",
]


@dataclass(frozen=True)
class ScalarLoss:
    """A scalar loss z -> l(z) with hand-coded first and second derivatives.

    All three callables accept floats or numpy arrays and are safe over the
    whole float64 range (no overflow for large |z|).  Instances are immutable
    and safe to share between threads.
    """

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    d1: Callable[[np.ndarray], np.ndarray]
    d2: Callable[[np.ndarray], np.ndarray]

    def __call__(self, z):
        return self.f(z)


def _out(arr):
    return float(arr) if arr.ndim == 0 else arr


def _sigmoid(z):
    z = np.asarray(z, dtype=float)
    e = np.exp(-np.abs(z))
    return np.where(z >= 0.0, 1.0 / (1.0 + e), e / (1.0 + e))


def _logistic_eval(z):
    z = np.asarray(z, dtype=float)
    # past the branch point the loss is z plus an exactly representable tail
    out = np.where(
        z > 30.0,
        z + np.log1p(np.exp(-np.abs(z))),
        np.log1p(np.exp(np.minimum(z, 30.0))),
    )
    return _out(out)


def _logistic_d1(z):
    return _out(_sigmoid(z))


def _logistic_d2(z):
    # sigma(z)(1-sigma(z)) evaluated from the small side so it stays positive
    # for |z| up to ~700 instead of flushing to 0 at z ~ +37.
    z = np.asarray(z, dtype=float)
    e = np.exp(-np.abs(z))
    s = e / (1.0 + e)
    return _out(s * (1.0 - s))


def logistic() -> ScalarLoss:
    """log(1 + exp(z)) with overflow-safe evaluation for large z."""
    return ScalarLoss("logistic", _logistic_eval, _logistic_d1, _logistic_d2)


def _squareplus_eval(z):
    z = np.asarray(z, dtype=float)
    r = np.sqrt(4.0 + z * z)
    # 0.5*(r+z) cancels catastrophically for z << 0; use 2/(r-z) there
    out = np.where(z < 0.0, 2.0 / (r - z), 0.5 * (r + z))
    return _out(out)


def _squareplus_d1(z):
    z = np.asarray(z, dtype=float)
    r = np.sqrt(4.0 + z * z)
    out = np.where(z < 0.0, 2.0 / (r - z), 0.5 * (r + z)) / r
    return _out(out)


def _squareplus_d2(z):
    z = np.asarray(z, dtype=float)
    r = np.sqrt(4.0 + z * z)
    return _out(2.0 / (r * r * r))


def squareplus() -> ScalarLoss:
    """0.5*(sqrt(4+z^2)+z), a smooth loss with the same structural profile
    as logistic but only polynomial tail decay."""
    return ScalarLoss("squareplus", _squareplus_eval, _squareplus_d1, _squareplus_d2)


_REGISTRY = {"logistic": logistic, "squareplus": squareplus}
LOSS_NAMES = tuple(sorted(_REGISTRY))


def get_loss(name: str) -> ScalarLoss:
    try:
        return _REGISTRY[name]()
    except KeyError:
        raise ValueError(f"unknown loss {name!r}; expected one of {LOSS_NAMES}") from None


# ---------------------------------------------------------------------------
# Structural-property audit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst_violation: float
    offending_z: Optional[float] = None


@dataclass(frozen=True)
class AssumptionReport:
    loss_name: str
    checks: tuple
    grid_spec: tuple  # (lo, hi, n_points)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


# Saturation threshold: beyond this, 1 - l'(z) is not representable in
# float64 for the logistic loss, so strict upper-bound checks stop there.
_STRICT_UPPER_Z = 30.0


def verify_assumption1(
    loss: ScalarLoss,
    grid=(-50.0, 50.0, 10001),
    eps_list=(1e-1, 1e-2, 1e-3),
) -> AssumptionReport:
    """Grid-based audit of the structural loss properties.

    Checks, each reported exactly once:
      positivity        l(z) > 0 and l''(z) > 0 on the grid
      derivative_bounds 0 < l'(z) everywhere; l'(z) <= 1, strictly below the
                        float64 saturation point
      left_tail         l(-1/eps) decays monotonically toward 0 along eps_list
      unimodality       l'' nondecreasing on z <= 0, nonincreasing on z >= 0
      decay             (1/eps^2) * l''(1/eps) decreases toward 0 along eps_list

    Non-finite evaluations fail the corresponding check and record the
    offending grid point.
    """
    lo, hi, n = grid
    if lo > -50.0 or hi < 50.0:
        raise ValueError("grid must cover at least [-50, 50]")
    eps_arr = np.asarray(eps_list, dtype=float)
    if eps_arr.ndim != 1 or len(eps_arr) < 2 or not np.all(np.diff(eps_arr) < 0):
        raise ValueError("eps_list must be strictly decreasing toward 0")

    zs = np.linspace(lo, hi, int(n))
    fz = np.asarray(loss.f(zs), dtype=float)
    d1z = np.asarray(loss.d1(zs), dtype=float)
    d2z = np.asarray(loss.d2(zs), dtype=float)

    checks = []

    def finite_or_fail(name, arr):
        bad = ~np.isfinite(arr)
        if np.any(bad):
            z_bad = float(zs[np.argmax(bad)])
            checks.append(CheckResult(name, False, float("inf"), z_bad))
            return False
        return True

    # positivity: l > 0 and l'' > 0 (strict convexity)
    if finite_or_fail("positivity", fz) and finite_or_fail("positivity", d2z):
        worst = float(min(fz.min(), d2z.min()))
        checks.append(CheckResult("positivity", worst > 0.0, max(0.0, -worst) if worst <= 0 else 0.0,
                                  float(zs[int(np.argmin(np.minimum(fz, d2z)))]) if worst <= 0 else None))

    # derivative bounds: 0 < l' <= 1, with strict < 1 below saturation
    if finite_or_fail("derivative_bounds", d1z):
        lower_ok = bool(np.all(d1z > 0.0))
        upper_ok = bool(np.all(d1z <= 1.0))
        strict_zone = zs <= _STRICT_UPPER_Z
        strict_ok = bool(np.all(d1z[strict_zone] < 1.0))
        passed = lower_ok and upper_ok and strict_ok
        worst = 0.0
        off = None
        if not passed:
            margins = np.minimum(d1z, 1.0 - d1z)
            idx = int(np.argmin(margins))
            worst = float(max(0.0, -margins[idx]))
            off = float(zs[idx])
        checks.append(CheckResult("derivative_bounds", passed, worst, off))

    # left tail: l(-1/eps) strictly decreasing toward 0 along eps_list
    tail_vals = np.asarray(loss.f(-1.0 / eps_arr), dtype=float)
    if finite_or_fail("left_tail", tail_vals):
        decreasing = bool(np.all(np.diff(tail_vals) < 0.0))
        small = bool(tail_vals[-1] < 1e-2)
        passed = decreasing and small
        checks.append(CheckResult("left_tail", passed,
                                  0.0 if passed else float(tail_vals[-1])))

    # unimodality of l'' about 0
    if finite_or_fail("unimodality", d2z):
        left = zs <= 0.0
        right = zs >= 0.0
        dl = np.diff(d2z[left])
        dr = np.diff(d2z[right])
        # ties allowed: float64 flushes the far tails to equal tiny values
        left_ok = bool(np.all(dl >= 0.0))
        right_ok = bool(np.all(dr <= 0.0))
        passed = left_ok and right_ok
        worst = 0.0
        if not passed:
            worst = float(max(np.max(-dl, initial=0.0), np.max(dr, initial=0.0)))
        checks.append(CheckResult("unimodality", passed, worst))

    # tail decay of the curvature: (1/eps^2) l''(1/eps) -> 0
    seq = np.asarray(loss.d2(1.0 / eps_arr), dtype=float) / (eps_arr * eps_arr)
    if finite_or_fail("decay", seq):
        decreasing = bool(np.all(np.diff(seq) < 0.0)) or bool(
            np.all(np.diff(seq) <= 0.0) and seq[-1] == 0.0
        )
        vanishing = bool(seq[-1] < 0.5 * seq[0]) if seq[0] > 0 else True
        passed = decreasing and vanishing
        checks.append(CheckResult("decay", passed, 0.0 if passed else float(seq[-1])))

    return AssumptionReport(loss.name, tuple(checks), (float(lo), float(hi), int(n)))


def relu_limit_gap(loss: ScalarLoss, z: float, eps: float) -> float:
    """|eps^2 * l(z / eps^2) - max(z, 0)|: distance from the rescaled loss to
    the hinge it flattens into as eps -> 0."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    scaled = eps * eps * float(loss.f(z / (eps * eps)))
    return abs(scaled - max(z, 0.0))

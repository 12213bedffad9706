"""The weighted finite-sum classification objective and its minimizer.

L(w) = (1/N) * sum_i count_i * l(-y_i w.x_i)

with l a ScalarLoss.  Exposes value/gradient/Hessian, the largest Hessian
eigenvalue, and the three critical step sizes 2/L, 1/lambda, 2/lambda where
lambda is the top Hessian eigenvalue at the minimizer and L the global
smoothness constant l''(0) * lambda_max(second moment).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .data import Dataset
from .exceptions import (
    ConvergenceError,
    DegenerateDataError,
    PowerIterationError,
    SeparableDataError,
)
from .losses import ScalarLoss

__all__ = ["Objective", "Solution", "lambda_max", "minimize"]

_DIVERGENCE_NORM = 1e12


class Objective:
    """Immutable pairing of a Dataset with a ScalarLoss.

    All evaluation methods are pure; instances can be shared freely across
    threads/processes.
    """

    def __init__(self, ds: Dataset, loss: ScalarLoss):
        self.ds = ds
        self.loss = loss
        # margins are z_i = -y_i w.x_i = (A w)_i
        self._A = -(ds.ys[:, None] * ds.xs)
        self._A.setflags(write=False)
        self._wts = ds.counts / ds.total_count
        self._wts.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.ds.dim

    def margins(self, w: np.ndarray) -> np.ndarray:
        return self._A @ np.asarray(w, dtype=float)

    def value(self, w) -> float:
        v = float(self._wts @ self.loss.f(self.margins(w)))
        if not np.isfinite(v):
            raise FloatingPointError(f"non-finite objective value at w={w!r}")
        return v

    def gradient(self, w) -> np.ndarray:
        z = self.margins(w)
        g = self._A.T @ (self._wts * self.loss.d1(z))
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient at w={w!r}")
        return g

    def hessian(self, w) -> np.ndarray:
        z = self.margins(w)
        d = self._wts * self.loss.d2(z)
        h = (self._A * d[:, None]).T @ self._A
        if not np.all(np.isfinite(h)):
            raise FloatingPointError(f"non-finite Hessian at w={w!r}")
        return 0.5 * (h + h.T)

    @cached_property
    def second_moment(self) -> np.ndarray:
        """sum_i (count_i/N) x_i x_i^T (signs cancel, so A works in place of X)."""
        m = (self._A * self._wts[:, None]).T @ self._A
        return 0.5 * (m + m.T)

    @cached_property
    def global_smoothness(self) -> float:
        """L = l''(0) * lambda_max(second moment), the uniform Hessian bound."""
        return float(self.loss.d2(0.0)) * lambda_max(self.second_moment)

    @cached_property
    def gram(self) -> np.ndarray:
        """Group Gram matrix K[i,j] = y_i y_j x_i.x_j used by the
        probability-space recurrence."""
        yx = self.ds.ys[:, None] * self.ds.xs
        return yx @ yx.T


@dataclass(frozen=True)
class Solution:
    """Minimizer report with the critical step sizes."""

    w_star: np.ndarray
    grad_norm: float
    lambda_star: float
    L_global: float
    eta_two_L: float
    eta_one_lambda: float
    eta_two_lambda: float
    iterations: int
    method: str

    def to_dict(self) -> dict:
        return {
            "w_star": [float(v) for v in np.atleast_1d(self.w_star)],
            "grad_norm": self.grad_norm,
            "lambda_star": self.lambda_star,
            "L_global": self.L_global,
            "eta_two_L": self.eta_two_L,
            "eta_one_lambda": self.eta_one_lambda,
            "eta_two_lambda": self.eta_two_lambda,
        }


def lambda_max(m: np.ndarray, tol: float = 1e-12, max_iters: int = 10**5, seed: int = 0) -> float:
    """Largest (algebraic) eigenvalue of a symmetric matrix.

    d=1 reads the scalar, d=2 uses the trace/discriminant closed form, and
    d>=3 runs shifted power iteration with a fixed-seed random start until
    the Rayleigh quotient is stable to ``tol`` relative.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    d = m.shape[0]
    if d == 1:
        return float(m[0, 0])
    if d == 2:
        mean = 0.5 * (m[0, 0] + m[1, 1])
        rad = float(np.hypot(0.5 * (m[0, 0] - m[1, 1]), m[0, 1]))
        return mean + rad

    # Shift by an upper bound on the spectral radius so the algebraically
    # largest eigenvalue also dominates in magnitude.
    shift = float(np.abs(m).sum(axis=1).max())
    if shift == 0.0:
        return 0.0
    b = m + shift * np.eye(d)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(d)
    v /= np.linalg.norm(v)
    lam = None
    for _ in range(max_iters):
        u = b @ v
        nu = float(np.linalg.norm(u))
        if nu == 0.0:
            v = rng.standard_normal(d)
            v /= np.linalg.norm(v)
            lam = None
            continue
        lam_new = float(v @ u)
        v = u / nu
        if lam is not None and abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return lam_new - shift
        lam = lam_new
    raise PowerIterationError("power iteration hit its cap", (lam or 0.0) - shift)


def _min_eigenvalue_ratio(m: np.ndarray) -> float:
    vals = np.linalg.eigvalsh(m)
    top = float(vals[-1])
    if top <= 0.0:
        return 0.0
    return float(vals[0]) / top


def minimize(
    obj: Objective,
    tol: float = 1e-12,
    method: str = "auto",
    max_iters: int | None = None,
) -> Solution:
    """Find the unique finite minimizer of a non-separable objective.

    Damped Newton for d <= 4, plain GD at eta = 1/L otherwise (or on request
    via ``method``).  Raises SeparableDataError when iterates run away (the
    usual symptom of separable data) and DegenerateDataError when the feature
    second moment is rank deficient, in which case the minimizer is a whole
    subspace and weight-space iteration is the wrong representation.
    """
    if method not in ("auto", "newton", "gd"):
        raise ValueError("method must be auto, newton, or gd")
    d = obj.dim
    if _min_eigenvalue_ratio(obj.second_moment) < 1e-12:
        raise DegenerateDataError(
            "feature second moment is rank deficient; minimizer is a subspace"
        )
    L = obj.global_smoothness
    use_newton = method == "newton" or (method == "auto" and d <= 4)

    w = np.zeros(d)
    iters = 0
    if use_newton:
        cap = max_iters or 500
        mu = 0.0
        eye = np.eye(d)
        fw = obj.value(w)
        while iters < cap:
            g = obj.gradient(w)
            if float(np.linalg.norm(g)) < tol:
                break
            h = obj.hessian(w)
            accepted = False
            while not accepted:
                try:
                    step = np.linalg.solve(h + mu * eye, -g)
                except np.linalg.LinAlgError:
                    step = None
                if step is not None and np.all(np.isfinite(step)):
                    trial = w + step
                    ft = obj.value(trial)
                    if ft <= fw:
                        w, fw = trial, ft
                        accepted = True
                        mu = 0.0 if mu <= 1e-12 else mu * 0.25
                        break
                mu = 1e-12 if mu == 0.0 else mu * 2.0
                if mu > 1e16:
                    raise DegenerateDataError(
                        "Hessian singular beyond the damping floor"
                    )
            iters += 1
            if float(np.max(np.abs(w))) > _DIVERGENCE_NORM:
                raise SeparableDataError(
                    "divergence while minimizing; data likely separable or degenerate"
                )
        else:
            raise ConvergenceError(f"Newton did not reach tol={tol} in {cap} iterations")
        method_used = "newton"
    else:
        cap = max_iters or 2_000_000
        eta = 1.0 / L
        g = obj.gradient(w)
        while float(np.linalg.norm(g)) >= tol:
            w = w - eta * g
            iters += 1
            if iters >= cap:
                raise ConvergenceError(f"GD did not reach tol={tol} in {cap} iterations")
            if float(np.max(np.abs(w))) > _DIVERGENCE_NORM:
                raise SeparableDataError(
                    "divergence while minimizing; data likely separable or degenerate"
                )
            g = obj.gradient(w)
        method_used = "gd"

    grad_norm = float(np.linalg.norm(obj.gradient(w)))
    lam = lambda_max(obj.hessian(w))
    if lam <= 0.0:
        raise DegenerateDataError("Hessian at the minimizer is not positive")
    two_lam = 2.0 / lam
    return Solution(
        w_star=w,
        grad_norm=grad_norm,
        lambda_star=lam,
        L_global=L,
        eta_two_L=2.0 / L,
        eta_one_lambda=two_lam / 2.0,
        eta_two_lambda=two_lam,
        iterations=iters,
        method=method_used,
    )

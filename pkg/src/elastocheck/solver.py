"""Regularized Newton energy minimization with finite-difference Hessians."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from .energy import EvalDomainError

FD_STEP_FACTOR = np.finfo(float).eps ** (1.0 / 3.0)
NESTED_STEP_FACTOR = np.finfo(float).eps ** 0.25
ENERGY_NOISE = 100.0 * np.finfo(float).eps
PIVOT_FLOOR = 1e-10


class NonFiniteEnergyError(ArithmeticError):
    pass


@dataclass
class ObjectiveFn:
    """Total energy over a configuration vector with some entries held fixed.

    ``grad`` is an optional analytic gradient; without it ``gradient_fd`` is used.
    """

    eval: Callable[[np.ndarray], float]
    fixed: np.ndarray
    fixed_values: np.ndarray
    grad: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        self.fixed = np.asarray(self.fixed, dtype=bool)
        self.fixed_values = np.asarray(self.fixed_values, dtype=float)

    @property
    def dim(self) -> int:
        return self.fixed.size

    @property
    def free(self) -> np.ndarray:
        return np.flatnonzero(~self.fixed)

    def with_fixed(self, fixed: np.ndarray, values: np.ndarray) -> "ObjectiveFn":
        return ObjectiveFn(self.eval, fixed, values, self.grad)

    def energy(self, x: np.ndarray) -> float:
        e = float(self.eval(x))
        if not np.isfinite(e):
            raise NonFiniteEnergyError(f"non-finite energy {e}")
        return e

    def gradient(self, x: np.ndarray) -> np.ndarray:
        if self.grad is None:
            return gradient_fd(self, x)
        g = np.array(self.grad(x), dtype=float)
        g[self.fixed] = 0.0
        return g


@dataclass
class SolveResult:
    x: np.ndarray
    energy: float
    grad_norm: float
    iterations: int
    converged: bool
    min_eigenvalue: float
    message: str = ""
    history: list = field(default_factory=list)


def gradient_fd(obj: ObjectiveFn, x, step_factor: float = FD_STEP_FACTOR) -> np.ndarray:
    """Central-difference gradient; zero at fixed coordinates."""
    x = np.array(x, dtype=float)
    g = np.zeros_like(x)
    for i in obj.free:
        h = step_factor * max(1.0, abs(x[i]))
        xi = x[i]
        x[i] = xi + h
        ep = obj.energy(x)
        x[i] = xi - h
        em = obj.energy(x)
        x[i] = xi
        g[i] = (ep - em) / (2.0 * h)
    return g


def hessian_fd(obj: ObjectiveFn, x, symmetrize: bool = True) -> np.ndarray:
    """Central differences of the gradient, restricted to free coordinates.

    Without an analytic gradient both difference levels use the larger
    eps^(1/4) step, the rounding optimum for second differences of W.
    """
    x = np.array(x, dtype=float)
    free = obj.free
    if obj.grad is None:
        factor = NESTED_STEP_FACTOR

        def grad(v):
            return gradient_fd(obj, v, factor)
    else:
        factor = FD_STEP_FACTOR
        grad = obj.gradient
    h_mat = np.empty((free.size, free.size))
    for col, i in enumerate(free):
        h = factor * max(1.0, abs(x[i]))
        xi = x[i]
        x[i] = xi + h
        gp = grad(x)
        x[i] = xi - h
        gm = grad(x)
        x[i] = xi
        h_mat[:, col] = (gp[free] - gm[free]) / (2.0 * h)
    if symmetrize:
        h_mat = 0.5 * (h_mat + h_mat.T)
    return h_mat


def stability_spectrum(obj: ObjectiveFn, x, k: int) -> np.ndarray:
    """The k smallest eigenvalues of the reduced Hessian, ascending."""
    return scipy.linalg.eigvalsh(hessian_fd(obj, x))[:k]


def _regularized_direction(h_mat: np.ndarray, g: np.ndarray) -> tuple:
    tau = 0.0
    scale = np.linalg.norm(h_mat)
    scale = scale if scale > 0 else 1.0
    tau_next = 1e-8 * scale
    while True:
        try:
            c = scipy.linalg.cho_factor(h_mat + tau * np.eye(len(g)))
            # numerically singular factors pass Cholesky but give huge steps
            if np.min(np.diag(c[0])) ** 2 > PIVOT_FLOOR * scale:
                return -scipy.linalg.cho_solve(c, g), tau
        except np.linalg.LinAlgError:
            pass
        tau = tau_next
        tau_next *= 10.0


def _safe_energy(obj: ObjectiveFn, x) -> float:
    try:
        return obj.energy(x)
    except (EvalDomainError, NonFiniteEnergyError, FloatingPointError, ValueError):
        return np.inf


def newton_minimize(obj: ObjectiveFn, x0, tol_grad: float = 1e-10, max_iter: int = 100) -> SolveResult:
    """Minimize ``obj`` from ``x0`` by Newton steps on (H + tau I) d = -g with Armijo backtracking."""
    x = np.array(x0, dtype=float)
    if not np.array_equal(x[obj.fixed], obj.fixed_values[obj.fixed]):
        raise ValueError("x0 does not respect the fixed entries")
    free = obj.free
    e = obj.energy(x)
    history = [e]
    message = "max_iter reached"
    converged = False
    it = 0
    if free.size == 0:
        return SolveResult(x, e, 0.0, 0, True, np.inf, "no free coordinates", history)
    while True:
        g = obj.gradient(x)[free]
        gnorm = float(np.linalg.norm(g))
        if gnorm <= tol_grad:
            converged = True
            message = "converged"
            break
        if it >= max_iter:
            break
        d, _ = _regularized_direction(hessian_fd(obj, x), g)
        slope = float(g @ d)
        noise = ENERGY_NOISE * max(abs(e), 1.0)
        alpha = 1.0
        while True:
            trial = x.copy()
            trial[free] += alpha * d
            e_trial = _safe_energy(obj, trial)
            if e_trial <= e + 1e-4 * alpha * slope:
                break
            # energy differences drowned in rounding: fall back to gradient decrease
            if abs(e_trial - e) <= noise and np.linalg.norm(obj.gradient(trial)[free]) < gnorm:
                break
            alpha *= 0.5
            if alpha < 1e-12:
                break
        if alpha < 1e-12:
            message = "line search failed"
            break
        x, e = trial, e_trial
        history.append(e)
        it += 1
    lam_min = float(scipy.linalg.eigvalsh(hessian_fd(obj, x))[0])
    return SolveResult(x, e, gnorm, it, converged, lam_min, message, history)

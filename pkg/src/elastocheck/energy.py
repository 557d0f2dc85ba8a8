"""Stored-energy densities W(F), first Piola-Kirchhoff stresses and sanity probes.

Three models are available:

``neo-hookean-eq3``
    W = kappa/4 (J^2 - 2 ln J - 1) + mu/2 (J^(-2/3) tr C - 3), defined for J > 0.
``convex-quadratic``
    W = 1/2 |F - I|^2. Convex, but neither frame invariant nor growing as J -> 0+.
``svk``
    Saint Venant-Kirchhoff with lambda = kappa - 2 mu / 3. Loses rank-one
    convexity in strong compression.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .tensor import IDENTITY, as_mat3, cofactor3, det3, is_rotation, right_cauchy_green

FD_STEP_FACTOR = np.finfo(float).eps ** (1.0 / 3.0)


class EvalDomainError(ValueError):
    """Energy evaluated where it is undefined (J <= 0 for the Eq.-3 model)."""

    def __init__(self, j: float):
        self.j = float(j)
        super().__init__(f"energy undefined at det(F) = {self.j!r} <= 0")


class ModelKind(str, enum.Enum):
    NEO_HOOKEAN = "neo-hookean-eq3"
    CONVEX_QUADRATIC = "convex-quadratic"
    SVK = "svk"


@dataclass(frozen=True)
class EnergyModel:
    kind: ModelKind
    kappa: float = 4.0
    mu: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        if not (self.kappa > 0 and self.mu > 0):
            raise ValueError(f"kappa and mu must be positive, got {self.kappa}, {self.mu}")

    @classmethod
    def from_name(cls, name: str, kappa: float = 4.0, mu: float = 2.0) -> "EnergyModel":
        try:
            kind = ModelKind(name)
        except ValueError:
            known = ", ".join(k.value for k in ModelKind)
            raise ValueError(f"unknown model {name!r} (known: {known})") from None
        return cls(kind, kappa, mu)

    @property
    def name(self) -> str:
        return self.kind.value

    @property
    def lame_lambda(self) -> float:
        return self.kappa - 2.0 * self.mu / 3.0


def neo_hookean_vol(j, kappa: float):
    """Volumetric part kappa/4 (J^2 - 2 ln J - 1)."""
    return 0.25 * kappa * (j * j - 2.0 * np.log(j) - 1.0)


def neo_hookean_iso(norm_sq, j, mu: float):
    """Isochoric part mu/2 (J^(-2/3) |F|^2 - 3); j may be a lifted variable."""
    return 0.5 * mu * (j ** (-2.0 / 3.0) * norm_sq - 3.0)


def energy_batch(model: EnergyModel, f: np.ndarray) -> np.ndarray:
    """Vectorized W over a stack ``(..., 3, 3)``; NaN where the model is undefined."""
    f = np.asarray(f, dtype=float)
    if model.kind is ModelKind.CONVEX_QUADRATIC:
        d = f - IDENTITY
        return 0.5 * np.sum(d * d, axis=(-2, -1))
    if model.kind is ModelKind.SVK:
        e = 0.5 * (np.swapaxes(f, -1, -2) @ f - IDENTITY)
        tr = np.trace(e, axis1=-2, axis2=-1)
        return 0.5 * model.lame_lambda * tr * tr + model.mu * np.sum(e * e, axis=(-2, -1))
    j = det3(f)
    tr_c = np.sum(f * f, axis=(-2, -1))
    with np.errstate(invalid="ignore", divide="ignore"):
        jj = np.where(j > 0, j, np.nan)
        return neo_hookean_vol(jj, model.kappa) + neo_hookean_iso(tr_c, jj, model.mu)


def _check_domain(model: EnergyModel, f: np.ndarray) -> None:
    if model.kind is ModelKind.NEO_HOOKEAN:
        j = np.atleast_1d(det3(f))
        if np.any(j <= 0):
            raise EvalDomainError(np.min(j))


def energy(model: EnergyModel, f) -> float | np.ndarray:
    """Stored energy W(f); raises EvalDomainError outside the model's domain."""
    f = as_mat3(f)
    _check_domain(model, f)
    w = energy_batch(model, f)
    return float(w) if np.ndim(w) == 0 else w


def stress_analytic(model: EnergyModel, f) -> np.ndarray:
    """Closed-form first Piola-Kirchhoff stress dW/dF."""
    f = as_mat3(f)
    if model.kind is ModelKind.CONVEX_QUADRATIC:
        return f - IDENTITY
    if model.kind is ModelKind.SVK:
        e = 0.5 * (np.swapaxes(f, -1, -2) @ f - IDENTITY)
        tr = np.trace(e, axis1=-2, axis2=-1)[..., None, None]
        s = model.lame_lambda * tr * IDENTITY + 2.0 * model.mu * e
        return f @ s
    _check_domain(model, f)
    j = np.asarray(det3(f))[..., None, None]
    tr_c = np.sum(f * f, axis=(-2, -1))[..., None, None]
    cof = cofactor3(f)
    jm23 = j ** (-2.0 / 3.0)
    vol = 0.25 * model.kappa * (2.0 * j - 2.0 / j) * cof
    iso = 0.5 * model.mu * (-(2.0 / 3.0) * jm23 * tr_c / j * cof + 2.0 * jm23 * f)
    return vol + iso


def stress_fd(model: EnergyModel, f) -> np.ndarray:
    """Central-difference dW/dF, the reference oracle for ``stress_analytic``."""
    f = as_mat3(f)
    if f.shape != (3, 3):
        raise ValueError("stress_fd takes a single 3x3 matrix")
    h = FD_STEP_FACTOR * max(1.0, float(np.linalg.norm(f)))
    p = np.empty((3, 3))
    for i in range(3):
        for k in range(3):
            step = np.zeros((3, 3))
            step[i, k] = h
            p[i, k] = (energy(model, f + step) - energy(model, f - step)) / (2.0 * h)
    return p


def frame_invariance_probe(model: EnergyModel, f, q) -> float:
    """|W(QF) - W(F)| for a rotation Q."""
    f = as_mat3(f)
    if not is_rotation(q):
        raise ValueError("q is not a proper rotation (Q^T Q = I, det Q = 1 to 1e-10)")
    q = as_mat3(q)
    return abs(energy(model, q @ f) - energy(model, f))


def growth_probe(model: EnergyModel, path: Iterable) -> np.ndarray:
    """W along a path of deformation gradients approaching det F -> 0+."""
    stack = as_mat3(np.array([as_mat3(p) for p in path]))
    j = det3(stack)
    if np.any(np.atleast_1d(j) <= 0):
        raise EvalDomainError(np.min(j))
    return np.atleast_1d(energy(model, stack))

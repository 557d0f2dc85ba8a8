"""Falsifiers for convexity and rank-one convexity, and a lifted polyconvexity witness.

All samplers are seeded per block of ``BLOCK_SIZE`` probes: block ``b`` draws from
``numpy.random.default_rng([seed, b])``.  The probe with global index ``i`` therefore
depends only on ``(seed, i)`` and "first violation" means lowest index.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .energy import EnergyModel, EvalDomainError, energy, energy_batch, neo_hookean_iso, neo_hookean_vol
from .tensor import as_mat3, cofactor3, det3, right_cauchy_green

BLOCK_SIZE = 1024
J_MIN = 0.05
J_MAX = 10.0
ROTATION_PAIR = np.diag([-1.0, -1.0, 1.0])


def tol_conv(rhs):
    return 1e-9 * np.maximum(1.0, np.abs(rhs))


@dataclass(frozen=True)
class SegmentProbe:
    f1: np.ndarray
    f2: np.ndarray
    lam: float

    def __post_init__(self):
        object.__setattr__(self, "f1", as_mat3(self.f1))
        object.__setattr__(self, "f2", as_mat3(self.f2))
        if not 0.0 < self.lam < 1.0:
            raise ValueError(f"lambda must lie strictly inside (0, 1), got {self.lam}")

    @property
    def blend(self) -> np.ndarray:
        return self.lam * self.f1 + (1.0 - self.lam) * self.f2


@dataclass(frozen=True)
class ConvexityViolation:
    """Certificate that W(lam F1 + (1-lam) F2) > lam W(F1) + (1-lam) W(F2)."""

    model: str
    kappa: float
    mu: float
    probe: SegmentProbe
    lhs: float
    rhs: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "kappa": self.kappa,
            "mu": self.mu,
            "f1": [float(v) for v in self.probe.f1.ravel()],
            "f2": [float(v) for v in self.probe.f2.ravel()],
            "lambda": float(self.probe.lam),
            "lhs": float(self.lhs),
            "rhs": float(self.rhs),
            "margin": float(self.margin),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "ConvexityViolation":
        probe = SegmentProbe(np.array(d["f1"]).reshape(3, 3), np.array(d["f2"]).reshape(3, 3), d["lambda"])
        return cls(d["model"], d["kappa"], d["mu"], probe, d["lhs"], d["rhs"])

    @classmethod
    def from_json(cls, s: str) -> "ConvexityViolation":
        return cls.from_dict(json.loads(s))

    def recheck(self) -> bool:
        """Re-evaluate the certificate from scratch through ``energy``."""
        model = EnergyModel.from_name(self.model, self.kappa, self.mu)
        p = self.probe
        lhs = energy(model, p.blend)
        rhs = p.lam * energy(model, p.f1) + (1.0 - p.lam) * energy(model, p.f2)
        return bool(lhs > rhs + tol_conv(rhs))


@dataclass(frozen=True)
class SegmentVerdict:
    status: str  # "holds" | "violated" | "undefined"
    lhs: float
    rhs: float
    violation: ConvexityViolation | None = None


def convexity_on_segment(model: EnergyModel, probe: SegmentProbe) -> SegmentVerdict:
    w1 = energy(model, probe.f1)
    w2 = energy(model, probe.f2)
    rhs = probe.lam * w1 + (1.0 - probe.lam) * w2
    try:
        lhs = energy(model, probe.blend)
    except EvalDomainError:
        return SegmentVerdict("undefined", float("nan"), rhs)
    if lhs > rhs + tol_conv(rhs):
        return SegmentVerdict("violated", lhs, rhs, ConvexityViolation(model.name, model.kappa, model.mu, probe, lhs, rhs))
    return SegmentVerdict("holds", lhs, rhs)


# --- reflection counterexample ---------------------------------------------


def reflection_matrices(lam: float) -> tuple:
    f1 = np.eye(3)
    f2 = np.diag([-1.0, -1.0, 1.0])
    return f1, f2, lam * f1 + (1.0 - lam) * f2


@dataclass
class ReflectionPoint:
    lam: float
    j: float
    j_closed_form: float
    tr_c: float
    tr_c_closed_form: float
    w: float
    status: str

    @property
    def algebra_ok(self) -> bool:
        return abs(self.j - self.j_closed_form) <= 1e-12 and abs(self.tr_c - self.tr_c_closed_form) <= 1e-12


@dataclass
class ReflectionReport:
    kappa: float
    mu: float
    w_f1: float
    w_f2: float
    points: list = field(default_factory=list)
    excluded: list = field(default_factory=list)

    @property
    def endpoints_zero(self) -> bool:
        return abs(self.w_f1) <= 1e-12 and abs(self.w_f2) <= 1e-12

    @property
    def all_violated(self) -> bool:
        return bool(self.points) and all(p.status == "violated" and p.w > 0 for p in self.points)

    @property
    def reproduced(self) -> bool:
        return self.endpoints_zero and self.all_violated and all(p.algebra_ok for p in self.points)

    def to_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "mu": self.mu,
            "w_f1": self.w_f1,
            "w_f2": self.w_f2,
            "points": [
                {
                    "lambda": p.lam,
                    "j": p.j,
                    "j_closed_form": p.j_closed_form,
                    "tr_c": p.tr_c,
                    "tr_c_closed_form": p.tr_c_closed_form,
                    "w": p.w,
                    "status": p.status,
                }
                for p in self.points
            ],
            "excluded": self.excluded,
            "n_violated": sum(p.status == "violated" for p in self.points),
            "reproduced": self.reproduced,
        }


def reflection_counterexample(kappa: float, mu: float, lambda_grid, exclude_half: bool = False) -> ReflectionReport:
    """Evaluate the reflection counterexample on every grid value of lambda.

    Grid points within 1e-3 of 1/2 are rejected with ``ValueError`` unless
    ``exclude_half`` is set, in which case they are dropped and listed in
    ``report.excluded``.
    """
    model = EnergyModel.from_name("neo-hookean-eq3", kappa, mu)
    f1, f2, _ = reflection_matrices(0.5)
    report = ReflectionReport(kappa, mu, energy(model, f1), energy(model, f2))
    for lam in lambda_grid:
        lam = float(lam)
        if not 0.0 < lam < 1.0:
            raise ValueError(f"lambda {lam} outside (0, 1)")
        if abs(lam - 0.5) < 1e-3:
            if not exclude_half:
                raise ValueError(f"lambda {lam} within 1e-3 of 1/2 (J(F_lambda) = 0)")
            report.excluded.append(lam)
            continue
        _, _, fl = reflection_matrices(lam)
        c = np.trace(right_cauchy_green(fl))
        verdict = convexity_on_segment(model, SegmentProbe(f1, f2, lam))
        report.points.append(
            ReflectionPoint(
                lam=lam,
                j=det3(fl),
                j_closed_form=(2 * lam - 1) ** 2,
                tr_c=float(c),
                tr_c_closed_form=2 * (2 * lam - 1) ** 2 + 1,
                w=verdict.lhs,
                status=verdict.status,
            )
        )
    return report


# --- samplers -------------------------------------------------------------------


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng([seed, block])


def _draw_admissible(rng, count: int, j_lo: float, j_hi: float = np.inf) -> np.ndarray:
    """``count`` matrices with iid U[-2, 2] entries and j_lo < det <= j_hi (rejection)."""
    out = np.empty((0, 3, 3))
    while out.shape[0] < count:
        cand = rng.uniform(-2.0, 2.0, size=(2 * count + 16, 3, 3))
        j = det3(cand)
        out = np.concatenate([out, cand[(j > j_lo) & (j <= j_hi)]])
    return out[:count]


def _blocks(n_samples: int):
    for b in range((n_samples + BLOCK_SIZE - 1) // BLOCK_SIZE):
        yield b, min(BLOCK_SIZE, n_samples - b * BLOCK_SIZE)


def _first_violation(model, f1, f2, lam):
    w1 = energy_batch(model, f1)
    w2 = energy_batch(model, f2)
    rhs = lam * w1 + (1.0 - lam) * w2
    lhs = energy_batch(model, lam[:, None, None] * f1 + (1.0 - lam)[:, None, None] * f2)
    # NaN lhs (blend left the domain) compares False: undefined, not a violation
    bad = np.flatnonzero(lhs > rhs + tol_conv(rhs))
    if bad.size == 0:
        return None
    k = bad[0]
    probe = SegmentProbe(f1[k], f2[k], float(lam[k]))
    return ConvexityViolation(model.name, model.kappa, model.mu, probe, float(lhs[k]), float(rhs[k]))


def sample_segments(seed: int, block: int, count: int):
    """Segment probes of one block: endpoints with J > J_MIN, every fourth a rotation pair."""
    rng = _block_rng(seed, block)
    f1 = _draw_admissible(rng, count, J_MIN)
    f2 = _draw_admissible(rng, count, J_MIN)
    lam = rng.uniform(0.05, 0.95, size=count)
    idx = block * BLOCK_SIZE + np.arange(count)
    pair = idx % 4 == 3
    f2[pair] = ROTATION_PAIR @ f1[pair]
    return f1, f2, lam


def falsify_convexity(model: EnergyModel, sampler_seed: int, n_samples: int) -> ConvexityViolation | None:
    for b, count in _blocks(n_samples):
        found = _first_violation(model, *sample_segments(sampler_seed, b, count))
        if found is not None:
            return found
    return None


def sample_rank_one(seed: int, block: int, count: int, compression_biased: bool = False, s_max: float | None = None):
    """Rank-one segments ``f + s a(x)b`` between s1 and s2, returned as (f1, f2, lam).

    Both endpoints keep J >= J_MIN; det is affine in s, so the whole segment does.
    """
    rng = _block_rng(seed, block)
    if compression_biased:
        s_max = 0.25 if s_max is None else s_max
        f = np.empty((0, 3, 3))
        while f.shape[0] < count:
            t = rng.uniform(0.05, 0.5, size=2 * count)
            cand = np.zeros((2 * count, 3, 3))
            cand[:, 0, 0] = t
            cand[:, 1, 1] = 1.0
            cand[:, 2, 2] = 1.0
            cand += rng.uniform(-0.02, 0.02, size=cand.shape)
            f = np.concatenate([f, cand[det3(cand) > J_MIN]])
        f = f[:count]
    else:
        s_max = 1.0 if s_max is None else s_max
        f = _draw_admissible(rng, count, 0.2, 5.0)
    a = rng.standard_normal((count, 3))
    b = rng.standard_normal((count, 3))
    a /= np.linalg.norm(a, axis=1, keepdims=True)
    b /= np.linalg.norm(b, axis=1, keepdims=True)
    c0 = det3(f)
    c1 = np.einsum("ni,nij,nj->n", a, cofactor3(f), b)
    lo = np.full(count, -s_max)
    hi = np.full(count, s_max)
    with np.errstate(divide="ignore"):
        root = (J_MIN - c0) / c1
    lo = np.where(c1 > 0, np.maximum(lo, root), lo)
    hi = np.where(c1 < 0, np.minimum(hi, root), hi)
    u = rng.uniform(size=(2, count))
    s1 = lo + u[0] * (hi - lo)
    s2 = lo + u[1] * (hi - lo)
    lam = rng.uniform(0.05, 0.95, size=count)
    ab = a[:, :, None] * b[:, None, :]
    f1 = f + s1[:, None, None] * ab
    f2 = f + s2[:, None, None] * ab
    return f1, f2, lam


def falsify_rank_one(
    model: EnergyModel, sampler_seed: int, n_samples: int, compression_biased: bool = False
) -> ConvexityViolation | None:
    """Search for a violation of convexity along rank-one segments."""
    for b, count in _blocks(n_samples):
        found = _first_violation(model, *sample_rank_one(sampler_seed, b, count, compression_biased))
        if found is not None:
            return found
    return None


# --- polyconvexity witness ------------------------------------------------------


def vol_midpoint_margin(kappa: float, j1, j2):
    """(g(j1) + g(j2))/2 - g((j1 + j2)/2) for the volumetric part; >= 0 if convex."""
    j1 = np.asarray(j1, dtype=float)
    j2 = np.asarray(j2, dtype=float)
    g1 = neo_hookean_vol(j1, kappa)
    g2 = neo_hookean_vol(j2, kappa)
    return 0.5 * (g1 + g2) - neo_hookean_vol(0.5 * (j1 + j2), kappa)


def iso_midpoint_margin(mu: float, f1, d1, f2, d2):
    """Midpoint margin of mu/2 (d^(-2/3) |F|^2 - 3), jointly in (F, d) with d > 0."""
    f1 = np.asarray(f1, dtype=float)
    f2 = np.asarray(f2, dtype=float)
    d1 = np.asarray(d1, dtype=float)
    d2 = np.asarray(d2, dtype=float)
    if np.any(d1 <= 0) or np.any(d2 <= 0):
        raise ValueError("lifted determinant must be positive at both endpoints")
    n1 = np.sum(f1 * f1, axis=(-2, -1))
    n2 = np.sum(f2 * f2, axis=(-2, -1))
    fm = 0.5 * (f1 + f2)
    nm = np.sum(fm * fm, axis=(-2, -1))
    g1 = neo_hookean_iso(n1, d1, mu)
    g2 = neo_hookean_iso(n2, d2, mu)
    return 0.5 * (g1 + g2) - neo_hookean_iso(nm, 0.5 * (d1 + d2), mu)


def sample_lifted(rng, count: int):
    """Lifted segment endpoints (F, d) with d uniform on (J_MIN, J_MAX)."""
    f1 = rng.uniform(-2.0, 2.0, size=(count, 3, 3))
    f2 = rng.uniform(-2.0, 2.0, size=(count, 3, 3))
    d = rng.uniform(J_MIN, J_MAX, size=(2, count))
    return f1, d[0], f2, d[1]


@dataclass
class WitnessReport:
    kappa: float
    mu: float
    n_samples: int
    vol_violations: int
    iso_violations: int
    vol_min_margin: float
    iso_min_margin: float

    @property
    def clean(self) -> bool:
        return self.vol_violations == 0 and self.iso_violations == 0

    def to_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "mu": self.mu,
            "n_samples": self.n_samples,
            "vol_violations": self.vol_violations,
            "iso_violations": self.iso_violations,
            "vol_min_margin": self.vol_min_margin,
            "iso_min_margin": self.iso_min_margin,
            "clean": self.clean,
        }


def polyconvexity_witness(kappa: float, mu: float, sampler_seed: int, n_samples: int) -> WitnessReport:
    """Midpoint-convexity checks of W = g_vol(J) + g_iso(F, d) in the lifted variables."""
    if not (kappa > 0 and mu > 0):
        raise ValueError("kappa and mu must be positive")
    vol_bad = iso_bad = 0
    vol_min = iso_min = np.inf
    for b, count in _blocks(n_samples):
        rng = _block_rng(sampler_seed, b)
        j = rng.uniform(J_MIN, J_MAX, size=(2, count))
        mv = vol_midpoint_margin(kappa, j[0], j[1])
        scale = np.maximum(neo_hookean_vol(j[0], kappa), neo_hookean_vol(j[1], kappa))
        vol_bad += int(np.sum(mv < -tol_conv(scale)))
        vol_min = min(vol_min, float(mv.min()))

        f1, d1, f2, d2 = sample_lifted(rng, count)
        mi = iso_midpoint_margin(mu, f1, d1, f2, d2)
        scale = np.maximum(np.abs(neo_hookean_iso(np.sum(f1 * f1, axis=(1, 2)), d1, mu)),
                           np.abs(neo_hookean_iso(np.sum(f2 * f2, axis=(1, 2)), d2, mu)))
        iso_bad += int(np.sum(mi < -tol_conv(scale)))
        iso_min = min(iso_min, float(mi.min()))
    return WitnessReport(kappa, mu, n_samples, vol_bad, iso_bad, float(vol_min), float(iso_min))

"""Discretized rods, the multiplicative Schwarz alternating loop, and the experiments.

Two problems share one interface (``objective``, ``n_nodes``, ``dofs_per_node``):

* ``Bar1DProblem``: finite-strain bar whose elements carry W(diag(F_ax, 1, 1)).
* ``ElasticaProblem``: planar chain of nodes with stretching and bending springs,
  pinned at both ends, compressed by a prescribed end shortening.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .energy import EnergyModel, EvalDomainError, energy_batch, stress_analytic
from .solver import ObjectiveFn, SolveResult, newton_minimize, stability_spectrum


class SchwarzError(RuntimeError):
    pass


# --- 1D bar ---------------------------------------------------------------------


@dataclass(frozen=True)
class Bar1DProblem:
    n_elements: int = 40
    length: float = 1.0
    area: float = 1.0
    model: EnergyModel = field(default_factory=lambda: EnergyModel.from_name("neo-hookean-eq3"))
    left_disp: float = 0.0
    right_disp: float = 0.1

    dofs_per_node = 1
    tol_grad = 1e-10

    def __post_init__(self):
        if self.n_elements < 2 or self.length <= 0 or self.area <= 0:
            raise ValueError("need n_elements >= 2, length > 0, area > 0")

    @property
    def n_nodes(self) -> int:
        return self.n_elements + 1

    @property
    def h(self) -> float:
        return self.length / self.n_elements

    @property
    def coords(self) -> np.ndarray:
        return np.linspace(0.0, self.length, self.n_nodes)

    def stretches(self, u) -> np.ndarray:
        return 1.0 + np.diff(np.asarray(u, dtype=float)) / self.h

    def _gradients(self, u) -> np.ndarray:
        f_ax = self.stretches(u)
        if np.any(f_ax <= 0):
            raise EvalDomainError(f_ax.min())
        f = np.zeros((f_ax.size, 3, 3))
        f[:, 0, 0] = f_ax
        f[:, 1, 1] = 1.0
        f[:, 2, 2] = 1.0
        return f

    def total_energy(self, u) -> float:
        return float(np.sum(energy_batch(self.model, self._gradients(u))) * self.area * self.h)

    def gradient(self, u) -> np.ndarray:
        p11 = stress_analytic(self.model, self._gradients(u))[:, 0, 0]
        g = np.zeros(self.n_nodes)
        g[:-1] -= self.area * p11
        g[1:] += self.area * p11
        return g

    def objective(self) -> ObjectiveFn:
        fixed = np.zeros(self.n_nodes, dtype=bool)
        fixed[[0, -1]] = True
        values = np.zeros(self.n_nodes)
        values[0], values[-1] = self.left_disp, self.right_disp
        return ObjectiveFn(self.total_energy, fixed, values, self.gradient)

    def initial_state(self) -> np.ndarray:
        u = np.zeros(self.n_nodes)
        u[0], u[-1] = self.left_disp, self.right_disp
        return u

    def affine_state(self) -> np.ndarray:
        t = self.coords / self.length
        return self.left_disp + t * (self.right_disp - self.left_disp)

    def nodal_change(self, a, b) -> np.ndarray:
        return np.abs(np.asarray(a) - np.asarray(b))


def bar_total_energy(p: Bar1DProblem, u) -> float:
    return p.total_energy(u)


# --- discrete elastica ---------------------------------------------------------


@dataclass(frozen=True)
class ElasticaProblem:
    n_nodes: int = 64
    length: float = 1.0
    k_s: float = 1e4
    k_b: float = 1.0
    end_shortening: float = 0.0

    dofs_per_node = 2

    def __post_init__(self):
        if self.n_nodes < 8 or self.length <= 0 or self.k_s <= 0 or self.k_b <= 0:
            raise ValueError("need n_nodes >= 8 and positive length, k_s, k_b")

    @property
    def h(self) -> float:
        return self.length / (self.n_nodes - 1)

    @property
    def tol_grad(self) -> float:
        # rounding floor of the gradient grows with the axial stiffness k_s / h
        return 1e-13 * (self.k_s / self.h) * math.sqrt(self.n_nodes)

    def with_shortening(self, d: float) -> "ElasticaProblem":
        return ElasticaProblem(self.n_nodes, self.length, self.k_s, self.k_b, d)

    def _segments(self, x):
        pos = np.asarray(x, dtype=float).reshape(self.n_nodes, 2)
        seg = np.diff(pos, axis=0)
        ell = np.hypot(seg[:, 0], seg[:, 1])
        if np.any(ell == 0):
            raise EvalDomainError(0.0)
        return seg, ell

    @staticmethod
    def _turning(seg):
        a, b = seg[:-1], seg[1:]
        cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
        dot = a[:, 0] * b[:, 0] + a[:, 1] * b[:, 1]
        return np.arctan2(cross, dot)

    def total_energy(self, x) -> float:
        seg, ell = self._segments(x)
        h = self.h
        stretch = 0.5 * self.k_s * h * np.sum((ell / h - 1.0) ** 2)
        theta = self._turning(seg)
        return float(stretch + 0.5 * self.k_b * np.sum(theta * theta) / h)

    def gradient(self, x) -> np.ndarray:
        seg, ell = self._segments(x)
        h = self.h
        g = np.zeros((self.n_nodes, 2))
        # stretching: d/d(seg) of k_s/(2h) (l - h)^2
        fs = (self.k_s / h) * (ell - h)[:, None] * seg / ell[:, None]
        g[1:] += fs
        g[:-1] -= fs
        # bending: theta_i = angle(b) - angle(a), d angle(v)/dv = perp(v)/|v|^2
        theta = self._turning(seg)
        coef = (self.k_b / h) * theta[:, None]
        perp = np.stack([-seg[:, 1], seg[:, 0]], axis=1) / (ell * ell)[:, None]
        da = -perp[:-1] * coef
        db = perp[1:] * coef
        # a = x_i - x_{i-1}, b = x_{i+1} - x_i for interior node i
        g[:-2] -= da
        g[1:-1] += da - db
        g[2:] += db
        return g.ravel()

    def objective(self) -> ObjectiveFn:
        fixed = np.zeros((self.n_nodes, 2), dtype=bool)
        fixed[[0, -1], :] = True
        values = np.zeros((self.n_nodes, 2))
        values[-1, 0] = self.length - self.end_shortening
        return ObjectiveFn(self.total_energy, fixed.ravel(), values.ravel(), self.gradient)

    def reference_positions(self) -> np.ndarray:
        pos = np.zeros((self.n_nodes, 2))
        pos[:, 0] = np.linspace(0.0, self.length, self.n_nodes)
        return pos

    def initial_state(self) -> np.ndarray:
        """Straight, undeformed interior with the right end moved in."""
        pos = self.reference_positions()
        pos[-1, 0] = self.length - self.end_shortening
        return pos.ravel()

    def straight_compressed_state(self) -> np.ndarray:
        pos = np.zeros((self.n_nodes, 2))
        pos[:, 0] = np.linspace(0.0, self.length - self.end_shortening, self.n_nodes)
        return pos.ravel()

    def perturbed_state(self, amplitude: float) -> np.ndarray:
        """Straight compressed state plus a transverse half-sine of the given amplitude."""
        pos = self.straight_compressed_state().reshape(self.n_nodes, 2)
        s = np.linspace(0.0, 1.0, self.n_nodes)
        pos[:, 1] = amplitude * np.sin(np.pi * s)
        pos[[0, -1], 1] = 0.0
        return pos.ravel()

    def axial_force(self, d: float | None = None) -> float:
        """Compressive force of the uniformly compressed straight state."""
        d = self.end_shortening if d is None else d
        return self.k_s * d / self.length

    def nodal_change(self, a, b) -> np.ndarray:
        diff = (np.asarray(a) - np.asarray(b)).reshape(self.n_nodes, 2)
        return np.hypot(diff[:, 0], diff[:, 1])

    def deflection(self, x) -> np.ndarray:
        return np.asarray(x).reshape(self.n_nodes, 2)[:, 1]


def elastica_total_energy(p: ElasticaProblem, x) -> float:
    return p.total_energy(x)


# --- decompositions --------------------------------------------------------------


@dataclass(frozen=True)
class SubdomainSpec:
    """Half-open node ranges ``[start, end)``, ordered left to right."""

    ranges: tuple
    n_nodes: int
    min_overlap: int = 2

    def __post_init__(self):
        ranges = tuple((int(a), int(b)) for a, b in self.ranges)
        object.__setattr__(self, "ranges", ranges)
        if not ranges:
            raise ValueError("at least one subdomain required")
        if ranges[0][0] != 0 or ranges[-1][1] != self.n_nodes:
            raise ValueError("subdomains must cover all nodes")
        for a, b in ranges:
            if not 0 <= a < b <= self.n_nodes:
                raise ValueError(f"bad range {(a, b)}")
        for (a0, b0), (a1, b1) in zip(ranges, ranges[1:]):
            if not a0 < a1 or not b0 < b1:
                raise ValueError("subdomains must be ordered left to right")
            if b0 - a1 < self.min_overlap:
                raise ValueError(f"overlap {b0 - a1} nodes is below the minimum of {self.min_overlap}")

    def __len__(self) -> int:
        return len(self.ranges)

    def spans(self) -> list:
        """Node index pairs ``(lo, hi)`` of the frozen nodes bounding each subdomain."""
        return [(max(a - 1, 0), min(b, self.n_nodes - 1)) for a, b in self.ranges]


def make_subdomains(n_nodes: int, k: int, overlap: float, min_overlap: int = 2) -> SubdomainSpec:
    """``k`` equal subdomains, neighbours sharing ``round(overlap * n_nodes)`` nodes."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k == 1:
        return SubdomainSpec(((0, n_nodes),), n_nodes, min_overlap)
    m = int(round(overlap * n_nodes))
    if m < min_overlap:
        raise ValueError(f"overlap of {m} nodes is below the minimum of {min_overlap}")
    cuts = [int(round(i * n_nodes / k)) for i in range(k + 1)]
    left, right = (m + 1) // 2, m // 2
    ranges = [(max(cuts[i] - left, 0) if i else 0, min(cuts[i + 1] + right, n_nodes) if i < k - 1 else n_nodes)
              for i in range(k)]
    return SubdomainSpec(tuple(ranges), n_nodes, min_overlap)


# --- solves ----------------------------------------------------------------------


def monolithic_solve(problem, x0=None, tol_grad: float | None = None, max_iter: int = 200) -> SolveResult:
    x0 = problem.initial_state() if x0 is None else x0
    tol_grad = problem.tol_grad if tol_grad is None else tol_grad
    return newton_minimize(problem.objective(), x0, tol_grad, max_iter)


@dataclass
class SweepRecord:
    sweep: int
    update_norm: float
    energy: float
    error: float | None = None


@dataclass
class SchwarzTrace:
    records: list = field(default_factory=list)
    converged: bool = False

    @property
    def n_sweeps(self) -> int:
        return len(self.records)

    def errors(self) -> np.ndarray:
        return np.array([r.error if r.error is not None else np.nan for r in self.records])

    def to_dict(self) -> dict:
        return {"converged": self.converged, "records": [asdict(r) for r in self.records]}


def schwarz_solve(
    problem,
    subdomains: SubdomainSpec,
    x0=None,
    tol_schwarz: float = 1e-10,
    max_sweeps: int = 500,
    reference=None,
    tol_grad: float | None = None,
) -> tuple:
    """Multiplicative alternating Schwarz with all nodes outside a subdomain frozen.

    Returns ``(x, trace)``.  ``reference`` (e.g. the monolithic solution) adds the
    max-norm nodal distance to it as each sweep's ``error``.
    """
    if subdomains.n_nodes != problem.n_nodes:
        raise ValueError("subdomain spec does not match the problem's node count")
    obj = problem.objective()
    tol_grad = problem.tol_grad if tol_grad is None else tol_grad
    x = np.array(problem.initial_state() if x0 is None else x0, dtype=float)
    dpn = problem.dofs_per_node
    trace = SchwarzTrace()
    for sweep in range(1, max_sweeps + 1):
        x_start = x.copy()
        for a, b in subdomains.ranges:
            outside = np.ones(problem.n_nodes, dtype=bool)
            outside[a:b] = False
            fixed = obj.fixed | np.repeat(outside, dpn)
            sub = obj.with_fixed(fixed, np.where(obj.fixed, obj.fixed_values, x))
            res = newton_minimize(sub, x, tol_grad)
            if not res.converged:
                raise SchwarzError(f"subdomain [{a}, {b}) solve failed in sweep {sweep}: {res.message}")
            x = res.x
        update = float(np.max(problem.nodal_change(x, x_start)))
        err = None if reference is None else float(np.max(problem.nodal_change(x, reference)))
        trace.records.append(SweepRecord(sweep, update, obj.energy(x), err))
        # a lone subdomain is the monolithic solve itself
        if update <= tol_schwarz or len(subdomains) == 1:
            trace.converged = True
            break
    return x, trace


def convergence_rate_fit(trace: SchwarzTrace, floor: float = 1e-13, min_sweeps: int = 5) -> tuple:
    """Least-squares fit of ln(error_k) = ln C + k ln(rho) over the pre-stagnation sweeps.

    Uses the reference error when recorded, otherwise the update norm.  The usable
    range is the leading run of sweeps whose error exceeds ``floor`` and keeps decreasing.
    """
    errs = trace.errors()
    if np.all(np.isnan(errs)):
        errs = np.array([r.update_norm for r in trace.records])
    ks, vals = [], []
    for k, e in enumerate(errs, start=1):
        if not e > floor or (vals and e >= vals[-1]):
            break
        ks.append(k)
        vals.append(e)
    if len(vals) < min_sweeps:
        raise ValueError(f"only {len(vals)} usable sweeps, need {min_sweeps}")
    k = np.array(ks, dtype=float)
    y = np.log(vals)
    slope, intercept = np.polyfit(k, y, 1)
    resid = y - (intercept + slope * k)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return float(np.exp(slope)), float(r2)


# --- buckling --------------------------------------------------------------------


def straight_state_solve(p: ElasticaProblem) -> SolveResult:
    """Axial-only minimization: every transverse coordinate held at zero."""
    obj = p.objective()
    fixed = obj.fixed.copy()
    fixed[1::2] = True
    return newton_minimize(obj.with_fixed(fixed, obj.fixed_values), p.straight_compressed_state(), p.tol_grad)


def straight_is_unstable(p: ElasticaProblem) -> bool:
    res = straight_state_solve(p)
    if not res.converged:
        raise SchwarzError(f"straight-state solve failed: {res.message}")
    return bool(stability_spectrum(p.objective(), res.x, 1)[0] < 0)


def critical_load_estimate(p: ElasticaProblem, tol: float | None = None, bracket: float = 0.2) -> float:
    """Smallest end shortening at which the straight state has a negative Hessian eigenvalue.

    Bisection on ``[0, bracket * length]`` down to ``tol`` (default ``1e-9 * length``).
    """
    tol = 1e-9 * p.length if tol is None else tol
    lo, hi = 0.0, bracket * p.length
    if straight_is_unstable(p.with_shortening(lo)) or not straight_is_unstable(p.with_shortening(hi)):
        raise SchwarzError("no stability change in the scanned bracket")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if straight_is_unstable(p.with_shortening(mid)):
            hi = mid
        else:
            lo = mid
    return hi


def euler_load(k_b: float, length: float) -> float:
    return math.pi**2 * k_b / length**2


def subdomain_problems(p: ElasticaProblem, subdomains: SubdomainSpec) -> list:
    """Stand-alone pinned-pinned rods spanning each subdomain's frozen end nodes."""
    out = []
    for lo, hi in subdomains.spans():
        out.append(ElasticaProblem(hi - lo + 1, (hi - lo) * p.h, p.k_s, p.k_b, 0.0))
    return out


@dataclass
class BucklingReport:
    length: float
    n_nodes: int
    k_s: float
    k_b: float
    end_shortening: float
    seed: int
    subdomain_ranges: list
    critical_shortening: float
    critical_strain: float
    subdomain_critical_strains: list
    applied_strain: float
    window_ok: bool
    status: str = "inconclusive"
    reason: str = ""
    straight_energy: float | None = None
    straight_min_eigenvalue: float | None = None
    plus: dict | None = None
    minus: dict | None = None
    mirror_error: float | None = None
    mirror_energy_gap: float | None = None
    schwarz: dict | None = None
    deflection_tol: float | None = None
    verdict: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _solution_summary(p: ElasticaProblem, res: SolveResult) -> dict:
    y = p.deflection(res.x)
    k = int(np.argmax(np.abs(y)))
    return {
        "energy": res.energy,
        "max_deflection": float(y[k]),
        "min_eigenvalue": res.min_eigenvalue,
        "converged": res.converged,
        "iterations": res.iterations,
        "grad_norm": res.grad_norm,
    }


def buckling_experiment(
    length: float,
    end_shortening: float,
    subdomains: SubdomainSpec,
    seed: int = 0,
    n_nodes: int | None = None,
    k_s: float = 1e4,
    k_b: float = 1.0,
    tol_schwarz: float = 1e-10,
    critical_shortening: float | None = None,
) -> BucklingReport:
    """Monolithic versus Schwarz solutions of a compressed pinned-pinned rod.

    The perturbation is a deterministic half-sine; ``seed`` is recorded only.
    A precomputed ``critical_shortening`` of the full rod skips that bisection.
    """
    n_nodes = subdomains.n_nodes if n_nodes is None else n_nodes
    p = ElasticaProblem(n_nodes, length, k_s, k_b, end_shortening)
    d_crit = critical_load_estimate(p) if critical_shortening is None else critical_shortening
    sub_strains = [critical_load_estimate(q) / q.length for q in subdomain_problems(p, subdomains)]
    applied = end_shortening / length
    crit_strain = d_crit / length
    report = BucklingReport(
        length, n_nodes, k_s, k_b, end_shortening, seed, [list(r) for r in subdomains.ranges],
        d_crit, crit_strain, sub_strains, applied, False,
    )
    if applied <= crit_strain:
        report.reason = "window empty: full rod stable"
        return report
    if len(subdomains) == 1:
        report.reason = "subdomain equals full rod; no window"
        return report
    if any(applied >= s for s in sub_strains):
        report.reason = "window empty: a subdomain is supercritical (subdomains too long)"
        return report
    report.window_ok = True

    obj = p.objective()
    straight = straight_state_solve(p)
    report.straight_energy = straight.energy
    report.straight_min_eigenvalue = float(stability_spectrum(obj, straight.x, 1)[0])

    amp = 1e-3 * length
    plus = monolithic_solve(p, p.perturbed_state(amp))
    minus = monolithic_solve(p, p.perturbed_state(-amp))
    report.plus = _solution_summary(p, plus)
    report.minus = _solution_summary(p, minus)
    xp = plus.x.reshape(n_nodes, 2)
    xm = minus.x.reshape(n_nodes, 2)
    report.mirror_error = float(max(np.max(np.abs(xp[:, 0] - xm[:, 0])), np.max(np.abs(xp[:, 1] + xm[:, 1]))))
    report.mirror_energy_gap = abs(plus.energy - minus.energy)

    xs, trace = schwarz_solve(p, subdomains, p.initial_state(), tol_schwarz)
    ys = p.deflection(xs)
    report.schwarz = {
        "energy": obj.energy(xs),
        "max_deflection": float(np.max(np.abs(ys))),
        "sweeps": trace.n_sweeps,
        "converged": trace.converged,
        "final_update_norm": trace.records[-1].update_norm,
    }
    dtol = 1e-6 * length
    report.deflection_tol = dtol
    buckled = min(plus.energy, minus.energy)
    v = {
        "monolithic_converged": plus.converged and minus.converged,
        "monolithic_buckled": abs(report.plus["max_deflection"]) > 10 * dtol
        and abs(report.minus["max_deflection"]) > 10 * dtol,
        "mirror_pair": report.plus["max_deflection"] * report.minus["max_deflection"] < 0
        and report.mirror_error <= 1e-6 and report.mirror_energy_gap <= 1e-8,
        "buckled_stable": plus.min_eigenvalue > 0 and minus.min_eigenvalue > 0,
        "straight_is_saddle": report.straight_min_eigenvalue < 0,
        "schwarz_converged": trace.converged,
        "schwarz_straight": report.schwarz["max_deflection"] < dtol,
        "schwarz_suboptimal": report.schwarz["energy"] > buckled,
    }
    report.verdict = v
    report.status = "reproduced" if all(v.values()) else "contradicted"
    return report

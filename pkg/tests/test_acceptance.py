"""Exit criteria, one test per criterion, each at its stated tolerance.

The terminal summary lists one PASS/FAIL line per criterion.
"""

import json
import math

import numpy as np
import pytest

from elastocheck import cli
from elastocheck.convexity import (
    falsify_convexity,
    falsify_rank_one,
    polyconvexity_witness,
    reflection_counterexample,
    reflection_matrices,
)
from elastocheck.energy import EnergyModel, energy, energy_batch, growth_probe, stress_analytic, stress_fd
from elastocheck.schwarz import (
    Bar1DProblem,
    ElasticaProblem,
    buckling_experiment,
    convergence_rate_fit,
    critical_load_estimate,
    euler_load,
    make_subdomains,
    monolithic_solve,
    schwarz_solve,
)
from elastocheck.tensor import det3, random_rotation, right_cauchy_green

pytestmark = pytest.mark.acceptance

NH = EnergyModel.from_name("neo-hookean-eq3", 4.0, 2.0)
GRID = [round(0.05 * k, 12) for k in range(1, 20) if k != 10]
MODELS = ["neo-hookean-eq3", "convex-quadratic", "svk"]


def admissible(rng, count, j_lo=0.05):
    out = []
    while len(out) < count:
        f = rng.uniform(-2.0, 2.0, (3, 3))
        if det3(f) > j_lo:
            out.append(f)
    return np.array(out)


def test_c01_reflection_counterexample(criterion):
    rep = reflection_counterexample(4.0, 2.0, GRID)
    w75 = energy(NH, reflection_matrices(0.75)[2])
    violated = sum(p.status == "violated" for p in rep.points)
    criterion(1, "reflection counterexample",
              f"W(F1)={rep.w_f1:.1e} W(F2)={rep.w_f2:.1e} violated {violated}/{len(GRID)} W(F_0.75)={w75:.10f}")
    assert abs(rep.w_f1) <= 1e-12 and abs(rep.w_f2) <= 1e-12
    assert len(rep.points) == len(GRID) == 18
    assert all(p.w > 0 and p.status == "violated" for p in rep.points)
    assert abs(w75 - 2.61485) <= 1e-4


def test_c02_closed_form_algebra(criterion):
    errs = []
    for lam in GRID:
        fl = reflection_matrices(lam)[2]
        errs.append(abs(det3(fl) - (2 * lam - 1) ** 2))
        errs.append(abs(np.trace(right_cauchy_green(fl)) - (2 * (2 * lam - 1) ** 2 + 1)))
    criterion(2, "closed-form J and tr C along the segment", f"max error {max(errs):.1e}")
    assert max(errs) <= 1e-12


def test_c03_frame_invariance(criterion):
    rng = np.random.default_rng(2024)
    fs = admissible(rng, 100)
    w0 = energy_batch(NH, fs)
    worst = 0.0
    for _ in range(100):
        q = random_rotation(rng)
        worst = max(worst, float(np.max(np.abs(energy_batch(NH, q @ fs) - w0))))
    criterion(3, "frame invariance, 100 rotations x 100 states", f"max |W(QF)-W(F)| = {worst:.2e}")
    assert worst <= 1e-10


def test_c04_growth(criterion):
    t = np.logspace(-6, 0, 50)
    w = growth_probe(NH, [np.diag([ti, 1.0, 1.0]) for ti in t])
    decreasing = bool(np.all(np.diff(w) < 0))
    criterion(4, "growth as det F -> 0+", f"strictly decreasing={decreasing} W(1e-6)={w[0]:.4g}")
    assert decreasing and w[0] > 1e4


def test_c05_polyconvexity_evidence(criterion):
    n = 100_000
    nh_r1 = falsify_rank_one(NH, 42, n)
    wit = polyconvexity_witness(4.0, 2.0, 42, n)
    svk = falsify_rank_one(EnergyModel.from_name("svk", 4.0, 2.0), 7, n, compression_biased=True)
    cq = EnergyModel.from_name("convex-quadratic")
    cq_found = [falsify_convexity(cq, 42, n), falsify_rank_one(cq, 42, n)]
    criterion(5, "polyconvexity evidence and controls",
              f"NH rank-one {'none' if nh_r1 is None else 'FOUND'}; witness vol/iso violations "
              f"{wit.vol_violations}/{wit.iso_violations}; SVK rank-one {'found' if svk else 'none'}; "
              f"convex-quadratic {sum(c is not None for c in cq_found)} violations")
    assert nh_r1 is None
    assert wit.clean
    assert svk is not None and svk.recheck()
    assert all(c is None for c in cq_found)


def test_c06_stress_consistency(criterion):
    rng = np.random.default_rng(6)
    worst = {}
    for name in MODELS:
        model = EnergyModel.from_name(name)
        rel = []
        for f in admissible(rng, 100, j_lo=0.2):
            pa = stress_analytic(model, f)
            rel.append(np.linalg.norm(pa - stress_fd(model, f)) / np.linalg.norm(pa))
        worst[name] = max(rel)
    criterion(6, "analytic vs finite-difference stress",
              ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))
    assert all(v <= 1e-6 for v in worst.values())


def test_c07_schwarz_bar(criterion):
    p = Bar1DProblem(n_elements=40, right_disp=0.1)
    mono = monolithic_solve(p)
    x, trace = schwarz_solve(p, make_subdomains(p.n_nodes, 2, 0.2), reference=mono.x)
    err = float(np.max(np.abs(x - mono.x)))
    rho, r2 = convergence_rate_fit(trace)
    _, trace40 = schwarz_solve(p, make_subdomains(p.n_nodes, 2, 0.4), reference=mono.x)
    rho40, _ = convergence_rate_fit(trace40)
    criterion(7, "Schwarz on the stretched bar",
              f"max error {err:.1e} after {trace.n_sweeps} sweeps, rho {rho:.4f} (r2 {r2:.5f}), rho@40% {rho40:.4f}")
    assert trace.converged and err <= 1e-9
    assert 0 < rho < 1 and r2 >= 0.95
    assert rho40 < rho


def test_c08_euler_oracle(criterion):
    forces = {}
    for length in (1.0, 2.0):
        p = ElasticaProblem(n_nodes=64, length=length)
        forces[length] = p.axial_force(critical_load_estimate(p))
    rel = abs(forces[1.0] / euler_load(1.0, 1.0) - 1)
    rel2 = abs(forces[2.0] / euler_load(1.0, 2.0) - 1)
    scaling = forces[1.0] / forces[2.0] / 4.0
    criterion(8, "discrete elastica critical load",
              f"P_cr(L=1) {forces[1.0]:.5f} vs {euler_load(1.0, 1.0):.5f} ({rel:.2%}), "
              f"L=2 off by {rel2:.2%}, 1/L^2 ratio {scaling:.4f}")
    assert rel <= 0.05 and rel2 <= 0.05
    assert abs(scaling - 1) <= 0.10


def test_c09_schwarz_misses_buckling(criterion):
    base = ElasticaProblem(n_nodes=64)
    d_crit = critical_load_estimate(base)
    rep = buckling_experiment(1.0, 1.5 * d_crit, make_subdomains(64, 2, 0.2), critical_shortening=d_crit)
    sw = rep.schwarz or {}
    criterion(9, "Schwarz from straight misses the buckled minima",
              f"window {rep.window_ok}; deflections {rep.plus['max_deflection']:+.5f}/{rep.minus['max_deflection']:+.5f} "
              f"energy gap {rep.mirror_energy_gap:.1e}; straight min eig {rep.straight_min_eigenvalue:.3f}; "
              f"Schwarz deflection {abs(sw.get('max_deflection', math.nan)):.1e} energy {sw.get('energy', math.nan):.6f} "
              f"vs buckled {rep.plus['energy']:.6f}")
    assert rep.window_ok
    for state in (rep.plus, rep.minus):
        assert state["converged"] and state["min_eigenvalue"] > 0
    assert rep.plus["max_deflection"] * rep.minus["max_deflection"] < 0
    assert rep.mirror_energy_gap <= 1e-8
    assert rep.straight_min_eigenvalue < 0
    assert sw["converged"] and abs(sw["max_deflection"]) < 1e-6 * 1.0
    assert sw["energy"] > max(rep.plus["energy"], rep.minus["energy"])
    assert rep.status == "reproduced"


DETERMINISM_RUNS = [
    ["counterexample"],
    ["falsify", "--model", "neo-hookean-eq3", "--test", "convexity"],
    ["falsify", "--model", "neo-hookean-eq3", "--test", "rank-one"],
    ["falsify", "--model", "neo-hookean-eq3", "--test", "polyconvexity-witness"],
    ["falsify", "--model", "svk", "--test", "rank-one", "--seed", "7"],
    ["schwarz"],
    ["buckling"],
]


def test_c10_determinism(criterion, tmp_path):
    identical = 0
    for i, argv in enumerate(DETERMINISM_RUNS):
        texts = []
        for rep_no in range(2):
            out = tmp_path / f"{i}_{rep_no}.json"
            cli.main(argv + ["--out", str(out)])
            doc = json.loads(out.read_text())
            doc["manifest"].pop("duration_s")
            texts.append(json.dumps(doc, sort_keys=True))
        identical += texts[0] == texts[1]
    criterion(10, "bit-identical reports on repeat", f"{identical}/{len(DETERMINISM_RUNS)} commands identical")
    assert identical == len(DETERMINISM_RUNS)

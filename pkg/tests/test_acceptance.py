"""Acceptance suite: one test per criterion, each logging a pass/fail line.

Run on its own with ``pytest tests/test_acceptance.py -v`` (lines appear in
the terminal summary) or ``python3 tests/test_acceptance.py``.
"""

import json
import math
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate
from scipy.stats import norm

from levyou import cli, coupling, feller, girsanov, harnack
from levyou.densities import (GaussianDensity, PolynomialDecayDensity, TabulatedDensity,
                              TruncatedStableDensity)
from levyou.levy_sim import LevyNoise
from levyou.linmodel import OUModel
from levyou.mc import combined_stderr, mc_reduce
from levyou.testfunctions import (constant, exp_bump, indicator_ball, indicator_halfspace,
                                  indicator_interval, lipschitz_ramp, normalized_bump)

from acceptance_log import report

LINE_1D = OUModel([[0.0]], [[1.0]])
GAUSS = GaussianDensity(variance=1.0, lambda0=1.0)
NOISE = LevyNoise(GAUSS)
SYMMETRIC = OUModel([[0.0, 1.0], [1.0, 0.0]], [[0.0], [1.0]])
NILPOTENT = OUModel([[0.0, 1.0], [0.0, 0.0]], [[0.0], [1.0]])
CC = coupling.coupling_config(GAUSS, LINE_1D)


def test_criterion_01_tv_decay_rate():
    ts = [4.0, 16.0, 64.0, 256.0]
    ests = [coupling.tv_weight_bound(LINE_1D, CC, [0.0], [CC.max_step], t, 200_000, seed=11,
                                     stream=k) for k, t in enumerate(ts)]
    fit = coupling.fit_loglog(ts, [e.value for e in ests])
    ok = -0.65 <= fit["slope"] <= -0.35 and fit["r2"] >= 0.9
    report(1, "weight-bound TV decays like t^-1/2", ok,
           f"slope {fit['slope']:.3f}, R2 {fit['r2']:.4f}")
    assert ok


def test_criterion_02_berry_esseen_floor():
    rows = coupling.berry_esseen_experiment(GAUSS, CC.max_step, [16.0, 64.0, 256.0], 1_000_000,
                                            seed=12)
    vals = {r["t"]: r["sqrt_t_tv"] for r in rows}
    floor = all(r["sqrt_t_tv"] + 3 * r["sqrt_t_stderr"] >= 0.1 for r in rows)
    variation = abs(vals[256.0] - vals[64.0]) / max(vals[256.0], vals[64.0])
    ok = floor and variation < 0.35
    report(2, "sqrt(t) TV stays bounded below", ok,
           ", ".join(f"t={t:g}: {v:.3f}" for t, v in vals.items()) + f"; variation {variation:.3f}")
    assert ok


def test_criterion_03_weight_gap():
    parts, ok = [], True
    for k, lt in enumerate([4.0, 16.0, 64.0]):
        T = lt / CC.lambda0
        for weights in ("eta", "eta_tilde"):
            g = coupling.lemma31_gap(T, CC, weights, LINE_1D, [0.0], [CC.max_step], 200_000,
                                     seed=13, stream=10 * k + (weights == "eta_tilde"))
            good = g.estimate.mean <= 1.1 * g.bound
            ok &= good
            parts.append(f"{weights}@{lt:g}: {g.ratio:.3f}")
        one = coupling.lemma31_gap(T, CC, "one", replicas=200_000, seed=13, stream=10 * k + 2)
        good = abs(one.estimate.mean - 1 / lt) <= 4 * one.estimate.stderr
        ok &= good
        parts.append(f"one@{lt:g}: {one.estimate.mean * lt:.3f}")
    report(3, "second-moment gap below sigma/(lambda0 T)", ok, "; ".join(parts))
    assert ok


def test_criterion_04_mecke():
    failures, tests = 0, 0
    for lam in (0.5, 2.0, 8.0):
        for name, F in girsanov.mecke_suite(lam / GAUSS.lambda0).items():
            cmp = girsanov.mecke_check(F, GAUSS, lam / GAUSS.lambda0, 100_000, seed=14,
                                       stream=tests)
            failures += not cmp.agrees(3.0)
            tests += 1
    ok = tests == 15 and failures <= 1
    report(4, "Mecke identity over 15 functional/intensity pairs", ok,
           f"{failures} excursions beyond 3 sigma")
    assert ok


def test_criterion_05_girsanov():
    T = 2.0
    spec = girsanov.ShiftSpec.uniform(GAUSS, T)
    cases = {"one": girsanov.constant_functional(1.0),
             "count": girsanov.jump_count_functional(T),
             "terminal": girsanov.terminal_functional(LINE_1D, NOISE, exp_bump([0.5], 1.0),
                                                      [0.0], T)}
    ok, parts = True, []
    for k, (name, F) in enumerate(cases.items()):
        cmp = girsanov.girsanov_check(F, spec, 200_000, seed=15, stream=k)
        ok &= cmp.agrees(3.0)
        parts.append(f"{name} z={cmp.z_score:.2f}")
        if name == "one":
            exact = 1 - math.exp(-GAUSS.lambda0 * T)
            ok &= abs(cmp.lhs.mean - exact) <= 4 * cmp.lhs.stderr
    report(5, "shifted-path change of measure", ok, ", ".join(parts))
    assert ok


def _harnack_case(rng):
    kind = rng.integers(4)
    c = rng.uniform(-1, 1, 1)
    if kind == 0:
        return exp_bump(c, float(rng.uniform(0.3, 2.0)))
    if kind == 1:
        return indicator_ball(c, float(rng.uniform(0.3, 2.0)))
    sign = float(rng.choice([-1.0, 1.0]))
    if kind == 2:
        return lipschitz_ramp([sign], float(rng.uniform(-1, 1)), float(rng.uniform(0.5, 3)))
    return indicator_halfspace([sign], float(rng.uniform(-1, 1)))


def test_criterion_06_harnack():
    rng = np.random.default_rng(16)
    violations = 0
    for case in range(100):
        f = _harnack_case(rng)
        x, y = rng.uniform(-1, 1, 1), rng.uniform(-1, 1, 1)
        t = float(rng.uniform(0.2, 2.0))
        rec = harnack.harnack_check(f, LINE_1D, NOISE, x, y, t, 2.0, 20_000, seed=16,
                                    stream=case)
        violations += not rec.passed
    closed = max(abs(harnack.compute_vp(GAUSS, 2.0, r) / math.exp(r * r) - 1)
                 for r in np.linspace(0.0, 3.0, 31))
    families = [GAUSS, GaussianDensity(dim=2), PolynomialDecayDensity.from_mass(1.0, 3.0),
                TruncatedStableDensity(0.5, 1.0, 0.5),
                TabulatedDensity([-2.0, 0.0, 2.0], [0.1, 0.4, 0.1])]
    # a 1e-300 shift skips the r = 0 shortcut, so this checks the normalization integral
    origin = max(abs(harnack.vp_at_shift(rho, p, np.full(rho.dim, 1e-300)) - 1)
                 for rho in families for p in (1.5, 2.0, 4.0))
    ok = violations == 0 and closed <= 1e-6 and origin <= 1e-8
    report(6, "Harnack inequality and V_p checks", ok,
           f"{violations}/100 violations, V_2 rel err {closed:.1e}, |V_p(0)-1| {origin:.1e}")
    assert ok


def test_criterion_07_ultracontractivity():
    p, t = 2.0, 1.0
    bound = harnack.ultracontractivity_bound(GAUSS, p, t, LINE_1D)
    # independent oracle: V_p(r)^{1-p} with the closed-form V_p, integrated by scipy
    expo = p / (2 * (p - 1) ** 2)
    integral, _ = integrate.quad(lambda r: math.exp((1 - p) * expo * r * r), -np.inf, np.inf,
                                 epsabs=0, epsrel=1e-13)
    oracle = (1 - math.exp(-GAUSS.lambda0 * t)) * integral ** (-1 / p)
    rel = abs(bound / oracle - 1)
    rng = np.random.default_rng(17)
    exceed = 0
    for k in range(20):
        f = normalized_bump(rng.uniform(-2, 2, 1), float(rng.uniform(0.1, 2.0)), p)
        e = harnack.p1_estimate(f, LINE_1D, NOISE, rng.uniform(-2, 2, 1), t, 50_000, seed=17,
                                stream=k)
        exceed += e.mean > bound + 3 * e.stderr
    ok = rel <= 1e-6 and exceed == 0
    report(7, "L^p to L^inf bound", ok, f"bound {bound:.10f}, rel err {rel:.1e}, "
           f"{exceed}/20 exceed")
    assert ok


def test_criterion_08_rank_and_tm():
    parts, ok = [], True
    for name, model in (("symmetric", SYMMETRIC), ("nilpotent", NILPOTENT)):
        rep = feller.estimate_tm(model, 2, 100.0, tuple_samples=10_000, seed=18)
        good = (feller.rank_condition(model, 2).satisfied and rep.tuples_tested >= 10_000
                and rep.tm_is_search_limit)
        ok &= good
        parts.append(f"{name}: t_m >= {rep.tm_lower:g} over {rep.tuples_tested} tuples")
    report(8, "rank condition and sampled t_m", ok, "; ".join(parts))
    assert ok


def test_criterion_09_strong_feller():
    tm = feller.estimate_tm(SYMMETRIC, 2, 100.0, seed=19).effective_tm()
    rows = feller.smoothing_modulus(indicator_halfspace([1.0, 0.0]), SYMMETRIC, NOISE, [0.0, 0.0],
                                    1.0, 2, tm, [1.0, 0.3, 0.1, 0.03, 0.01], 200_000, seed=19)
    by_h = sorted(rows, key=lambda r: r.h)
    small, big = by_h[0], by_h[-1]
    ratio_ok = small.increment <= big.increment / 5 + 3 * math.hypot(small.stderr, big.stderr / 5)
    mono = all(a.increment <= b.increment + 3 * math.hypot(a.stderr, b.stderr)
               for a, b in zip(by_h, by_h[1:]))
    ok = ratio_ok and mono
    report(9, "smoothing of a discontinuous function", ok,
           ", ".join(f"h={r.h:g}: {r.increment:.4f}" for r in by_h))
    assert ok


def test_criterion_10_comparisons():
    ok, parts = True, []
    jump_noise = LevyNoise(GaussianDensity(lambda0=2.0))
    for name, f in (("one", constant(1.0)), ("zero", constant(0.0)),
                    ("halfline", indicator_halfspace([1.0], 0.0))):
        cmp = coupling.l1_comparison_check(LINE_1D, jump_noise, f, [0.0], 1.0, 1.0, 200_000,
                                           seed=20)
        ok &= cmp.lhs_at_least(3.0)
        parts.append(f"L1 {name} z={cmp.z_score:.1f}")
    extra = GaussianDensity(lambda0=0.5)
    for name, f in (("one", constant(1.0)), ("halfline", indicator_halfspace([1.0], 0.0))):
        cmp = harnack.semigroup_comparison_check(LINE_1D, NOISE, extra, f, [0.0], 1.0, 200_000,
                                                 seed=21)
        ok &= cmp.lhs_at_least(3.0)
        parts.append(f"extra-noise {name} z={cmp.z_score:.1f}")
    cmp = harnack.semigroup_comparison_check(LINE_1D, NOISE, GaussianDensity(lambda0=1e-3),
                                             indicator_halfspace([1.0], 0.3), [0.0], 1.0,
                                             200_000, seed=22)
    ok &= abs(cmp.lhs.mean - cmp.rhs.mean) <= 3 * combined_stderr(cmp.lhs, cmp.rhs)
    dim = coupling.gaussian_dimension_check(1, indicator_interval(0.0, 1.0), 1.0, 1.0, [0.0],
                                            200_000, seed=23)
    oracle = (norm.cdf(1) - 0.5, math.sqrt(2) * (norm.cdf(1 / math.sqrt(2)) - 0.5))
    quad_err = max(abs(a - b) for a, b in zip(dim.quadrature, oracle))
    ok &= dim.passed and quad_err <= 1e-6 and dim.factor == pytest.approx(math.sqrt(2))
    parts.append(f"heat quadrature err {quad_err:.1e}")
    report(10, "comparison inequalities", ok, ", ".join(parts))
    assert ok


SMALL = {
    "simulate": {"experiment": {"export_paths": True}, "replicas": 5000},
    "tv-decay": {"experiment": {"t_grid": [4.0, 16.0], "method": "both"}, "replicas": 6000},
    "harnack": {"experiment": {"cases": 4}, "replicas": 3000},
    "vp": {"experiment": {"r_grid": [0.0, 1.0, 2.0]}},
    "rank": {"model": {"A": SYMMETRIC.A.tolist(), "B": SYMMETRIC.B.tolist()},
             "experiment": {"t_max": 10.0, "tuple_samples": 1000}},
    "feller": {"model": {"A": SYMMETRIC.A.tolist(), "B": SYMMETRIC.B.tolist()},
               "experiment": {"tm": "inf", "radii": [1.0, 0.1]}, "replicas": 6000},
    "girsanov-check": {"replicas": 6000},
    "mecke-check": {"replicas": 3000},
    "berry-esseen": {"experiment": {"t_grid": [4.0, 16.0]}, "replicas": 6000},
}


def _bernoulli_coverage(p=0.3, reps=1000):
    hits = 0
    for k in range(reps):
        lo, hi = mc_reduce(lambda rng, n: (rng.random(n) < p).astype(float), 2000, seed=k).ci()
        hits += lo <= p <= hi
    return hits / reps


def test_criterion_11_infrastructure(tmp_path):
    mismatched = []
    for kind, doc in SMALL.items():
        outputs = []
        for workers in (1, 4, 16):
            out = tmp_path / f"{kind}-{workers}"
            code = cli._run_one(kind, {**doc, "seed": 3, "workers": workers,
                                       "output_dir": str(out)})
            assert code in (0, 1), kind
            files = sorted(p.name for p in out.iterdir() if p.name != "resolved_config.json")
            blob = {name: (out / name).read_bytes() for name in files}
            summary = json.loads(blob.pop("summary.json"))
            outputs.append((blob, json.dumps(summary, sort_keys=True)))
        if any(o != outputs[0] for o in outputs[1:]):
            mismatched.append(kind)
    coverage = _bernoulli_coverage()
    ok = not mismatched and coverage >= 0.93
    report(11, "determinism across worker counts and CI coverage", ok,
           f"{len(SMALL) - len(mismatched)}/{len(SMALL)} experiments identical, "
           f"coverage {coverage:.3f}")
    assert ok


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([str(Path(__file__)), "-q"]))

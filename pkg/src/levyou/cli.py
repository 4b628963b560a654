"""Command line entry point: ``levyou <subcommand> [--config PATH] ...``.

Exit codes: 0 all assertions pass, 1 some assertion failed, 2 the config
(or a parameter in it) is invalid, 3 a model hypothesis does not hold.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import coupling, feller, girsanov, harnack, testfunctions
from .config import EXPERIMENTS, ConfigError, ExperimentConfig, load_config, parse_config
from .densities import restrict_to_ball
from .errors import InvalidInputError, LevyOUError, PreconditionError
from .levy_sim import poisson_pmf, sample_X
from .mc import BLOCK_SIZE
from .plotting import loglog_svg

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_PRECONDITION = 0, 1, 2, 3


@dataclass
class Outcome:
    columns: list[str]
    rows: list[dict]
    assertions: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    svg: str | None = None

    def check(self, name: str, ok: bool, **detail) -> None:
        self.assertions.append({"name": name, "pass": bool(ok), **detail})

    @property
    def passed(self) -> bool:
        return all(a["pass"] for a in self.assertions)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            raise ValueError("refusing to write NaN to a results table")
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(value, (list, tuple, np.ndarray)):
        return " ".join(_fmt(v) for v in value)
    return str(value)


def write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c, "")) for c in columns])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    return obj


def _point(value, n: int, default: float = 0.0) -> np.ndarray:
    if value is None:
        return np.full(n, default)
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1 and n > 1:
        arr = np.full(n, float(arr[0]))
    if arr.size != n:
        raise InvalidInputError(f"point {value!r} does not have dimension {n}")
    return arr


def _within(lhs: float, rhs: float, se: float, k: float = 3.0) -> bool:
    """lhs <= rhs up to k standard errors."""
    return lhs - rhs <= k * se + 1e-12


# ---- experiments -------------------------------------------------------------

def run_simulate(cfg: ExperimentConfig) -> Outcome:
    p = cfg.params
    x = _point(p["x"], cfg.model.n)
    X = sample_X(cfg.model, cfg.noise, x, float(p["t"]), cfg.replicas, cfg.seed, cfg.workers)
    cols = ["replica"] + [f"X_{j}" for j in range(cfg.model.n)]
    rows = [{"replica": r, **{f"X_{j}": X[r, j] for j in range(X.shape[1])}}
            for r in range(X.shape[0])]
    out = Outcome(cols, rows)
    out.summary = {"mean": X.mean(axis=0).tolist(),
                   "cov": np.atleast_2d(np.cov(X, rowvar=False)).tolist() if len(X) > 1 else None}
    out.check("all samples finite", bool(np.all(np.isfinite(X))))
    if p["export_paths"]:
        from .mc import block_stream
        rng = block_stream(cfg.seed, 0, 0).generator()
        b0, _ = cfg.noise.sample_paths(float(p["t"]), rng, min(cfg.replicas, BLOCK_SIZE))
        out.summary["paths_file"] = "paths.csv"
        out.summary["_paths"] = b0
    return out


def run_tv_decay(cfg: ExperimentConfig) -> Outcome:
    p, model = cfg.params, cfg.model
    if not model.is_dissipative():
        raise PreconditionError("dissipativity <Ax, x> <= 0",
                                "the symmetric part of A has a positive eigenvalue")
    cc = coupling.coupling_config(cfg.noise.jump0, model, p["z0"], p["eps"], p["clamp_density"])
    x = _point(p["x"], model.n)
    if p["y"] is None:
        y = x.copy()
        y[0] += cc.max_step
    else:
        y = _point(p["y"], model.n)
    method = p["method"]
    if method not in ("weight", "histogram", "both"):
        raise InvalidInputError("method must be weight, histogram or both")
    rows, by_method = [], {"weight": [], "histogram": []}
    for k, t in enumerate(map(float, p["t_grid"])):
        if method in ("weight", "both"):
            e = coupling.tv_weight_bound(model, cc, x, y, t, cfg.replicas, cfg.seed, cfg.workers,
                                         stream=2 * k)
            by_method["weight"].append(e)
        if method in ("histogram", "both"):
            Xx = sample_X(model, cfg.noise, x, t, cfg.replicas, cfg.seed, cfg.workers, 2 * k + 1)
            Xy = sample_X(model, cfg.noise, y, t, cfg.replicas, cfg.seed, cfg.workers, 2 * k + 1)
            e = coupling.tv_histogram(Xx, Xy, seed=cfg.seed + k, paired_samples=True, t=t)
            by_method["histogram"].append(e)
    for name, ests in by_method.items():
        rows += [{"t": e.t, "tv": e.value, "stderr": e.stderr, "method": name} for e in ests]
    out = Outcome(["t", "tv", "stderr", "method"], rows)
    out.summary = {"coupling": cc.to_dict(), "x": x.tolist(), "y": y.tolist()}
    series, notes = [], []
    for name, ests in by_method.items():
        if not ests:
            continue
        ts, tv = [e.t for e in ests], [e.value for e in ests]
        series.append({"label": name, "x": ts, "y": tv})
        if len(ests) >= 2 and all(v > 0 for v in tv):
            fit = coupling.fit_loglog(ts, tv)
            out.summary[f"fit_{name}"] = fit
            notes.append(f"{name} slope {fit['slope']:.3f}")
            if name == "weight":
                lo, hi = p["slope_range"]
                out.check("weight bound slope in range", lo <= fit["slope"] <= hi, **fit)
                out.check("weight bound fit r2", fit["r2"] >= p["min_r2"], r2=fit["r2"])
    if method == "both":
        for w, h in zip(by_method["weight"], by_method["histogram"]):
            out.check(f"bound dominates histogram at t={w.t:g}",
                      _within(h.value, w.value, math.hypot(h.stderr, w.stderr)))
    out.svg = loglog_svg(series, "Total variation decay", "t", "TV", "; ".join(notes))
    return out


def _random_case(rng: np.random.Generator, n: int, box: float):
    kind = rng.integers(4)
    c = rng.uniform(-box, box, n)
    if kind == 0:
        return testfunctions.exp_bump(c, float(rng.uniform(0.3, 2.0)))
    if kind == 1:
        return testfunctions.indicator_ball(c, float(rng.uniform(0.3, 2.0)))
    normal = rng.normal(size=n)
    normal /= np.linalg.norm(normal)
    if kind == 2:
        return testfunctions.lipschitz_ramp(normal, float(rng.uniform(-1, 1)),
                                            float(rng.uniform(0.5, 3.0)))
    return testfunctions.indicator_halfspace(normal, float(rng.uniform(-1, 1)))


def run_harnack(cfg: ExperimentConfig) -> Outcome:
    p, model = cfg.params, cfg.model
    pp = float(p["p"])
    if p["vp"] not in ("auto", "quadrature"):
        raise InvalidInputError("vp must be 'auto' or 'quadrature'")
    if p["vp"] == "auto":
        vp = harnack.radial_vp(cfg.noise.jump0, pp)
    else:
        def vp(r, rho=cfg.noise.jump0):
            return harnack.compute_vp(rho, pp, r)
    rng = np.random.Generator(np.random.Philox(key=[cfg.seed, 0xA11CE]))
    t_lo, t_hi = p["t_range"]
    rows, violations = [], 0
    for case in range(int(p["cases"])):
        f = _random_case(rng, model.n, float(p["box"]))
        x = rng.uniform(-p["box"], p["box"], model.n)
        y = rng.uniform(-p["box"], p["box"], model.n)
        t = float(rng.uniform(t_lo, t_hi))
        rec = harnack.harnack_check(f, model, cfg.noise, x, y, t, pp, cfg.replicas, cfg.seed,
                                    cfg.workers, vp=vp, stream=case)
        violations += not rec.passed
        rows.append({"case_id": case, "lhs": rec.lhs, "rhs": rec.rhs, "margin": rec.margin,
                     "pass": rec.passed, "stderr": rec.stderr, "t": t, "x": x, "y": y,
                     "f": f.name, "vp": rec.vp})
    out = Outcome(["case_id", "lhs", "rhs", "margin", "pass", "stderr", "t", "x", "y", "f", "vp"],
                  rows)
    out.summary = {"violations": violations, "cases": len(rows), "p": pp}
    out.check("no Harnack violations beyond 3 sigma", violations == 0, violations=violations)
    return out


def run_vp(cfg: ExperimentConfig) -> Outcome:
    p, rho = cfg.params, cfg.noise.jump0
    pp = float(p["p"])
    closed = rho.family == "gaussian"
    rows = []
    for r in map(float, p["r_grid"]):
        d = harnack.compute_vp_detail(rho, pp, r, int(p["grid_points"]))
        row = {"r": r, "vp": d.value, "argmax_radius": d.argmax_radius,
               "sup_at_boundary": d.sup_at_boundary}
        if closed:
            row["closed_form"] = float(harnack.vp_gaussian(pp, r, rho.variance))
        rows.append(row)
    cols = ["r", "vp", "argmax_radius", "sup_at_boundary"] + (["closed_form"] if closed else [])
    out = Outcome(cols, rows)
    vals = [row["vp"] for row in rows]
    for row in rows:
        if row["r"] == 0.0:
            out.check("V_p(0) = 1", abs(row["vp"] - 1.0) <= 1e-8, value=row["vp"])
    order = np.argsort([row["r"] for row in rows])
    sv = [vals[i] for i in order]
    out.check("V_p nondecreasing in r",
              all(b >= a * (1 - 1e-9) for a, b in zip(sv, sv[1:])))
    if closed:
        worst = max(abs(row["vp"] / row["closed_form"] - 1) for row in rows
                    if math.isfinite(row["closed_form"]))
        out.check("Gaussian closed form to 1e-6", worst <= 1e-6, max_rel_err=worst)
    out.svg = loglog_svg([{"label": f"V_{pp:g}", "x": [r["r"] for r in rows], "y": vals}],
                         "V_p profile", "r", "V_p(r)")
    return out


def run_rank(cfg: ExperimentConfig) -> Outcome:
    p = cfg.params
    rep = feller.estimate_tm(cfg.model, int(p["m"]), float(p["t_max"]), int(p["tuple_samples"]),
                             cfg.seed)
    d = rep.as_dict()
    row = {**{k: d[k] for k in ("m", "n", "rank_H", "satisfied", "tm_lower", "tuples_tested",
                                "t_max_searched")},
           "tm_effective": rep.effective_tm() if rep.satisfied else 0.0}
    out = Outcome(list(row), [row])
    out.summary = {"report": d}
    print(json.dumps(_jsonable(d), indent=2))
    out.check("rank condition holds", rep.satisfied, rank_H=rep.rank_H, n=rep.n)
    return out


def run_feller(cfg: ExperimentConfig) -> Outcome:
    p, model = cfg.params, cfg.model
    f = testfunctions.from_config(p["f"])
    m = int(p["m"])
    base = feller.rank_condition(model, m)
    if not base.satisfied:
        raise PreconditionError("rank condition Rank(B, AB, ..., A^{m-1}B) = n",
                                f"rank is {base.rank_H} < {model.n}")
    tm = p["tm"]
    report = None
    if tm == "estimate":
        report = feller.estimate_tm(model, m, float(p["t_max"]), seed=cfg.seed)
        tm = report.effective_tm()
    elif tm == "inf":
        tm = math.inf
    elif isinstance(tm, (int, float)) and not isinstance(tm, bool) and tm > 0:
        tm = float(tm)
    else:
        raise InvalidInputError("tm must be 'estimate', 'inf' or a positive number")
    x = _point(p["x"], model.n)
    rows = feller.smoothing_modulus(f, model, cfg.noise, x, float(p["t"]), m, tm, p["radii"],
                                    cfg.replicas, cfg.seed, cfg.workers, p["direction"])
    out = Outcome(["h", "increment", "stderr", "signed"], [r.as_dict() for r in rows])
    out.summary = {"tm": tm, "rank_report": report.as_dict() if report else None}
    ordered = sorted(rows, key=lambda r: r.h)
    small, big = ordered[0], ordered[-1]
    k = float(p["min_ratio"])
    out.check(f"increment at h={small.h:g} <= increment at h={big.h:g} / {k:g}",
              _within(small.increment, big.increment / k, math.hypot(small.stderr, big.stderr / k)))
    out.check("modulus monotone in h", all(
        _within(a.increment, b.increment, math.hypot(a.stderr, b.stderr))
        for a, b in zip(ordered, ordered[1:])))
    pos = [r for r in ordered if r.h > 0 and r.increment > 0]
    note = ""
    if len(pos) >= 2:
        fit = coupling.fit_loglog([r.h for r in pos], [r.increment for r in pos])
        out.summary["fit"] = fit
        note = f"slope {fit['slope']:.3f}"
    out.svg = loglog_svg([{"label": "|P f(x) - P f(x+he)|", "x": [r.h for r in pos],
                           "y": [r.increment for r in pos]}],
                         "Smoothing modulus", "h", "increment", note)
    return out


COMPARISON_COLUMNS = ["test_name", "lhs_mean", "lhs_stderr", "rhs_mean", "rhs_stderr", "z_score",
                      "pass"]


def _comparison_row(name, cmp) -> dict:
    return {"test_name": name, "lhs_mean": cmp.lhs.mean, "lhs_stderr": cmp.lhs.stderr,
            "rhs_mean": cmp.rhs.mean, "rhs_stderr": cmp.rhs.stderr, "z_score": cmp.z_score,
            "pass": cmp.agrees(3.0)}


def run_girsanov(cfg: ExperimentConfig) -> Outcome:
    p, model = cfg.params, cfg.model
    T = float(p["T"])
    nu = cfg.noise.jump0
    if p["shift_ball_radius"] is None:
        spec = girsanov.ShiftSpec.uniform(nu, T)
    else:
        spec = girsanov.ShiftSpec(restrict_to_ball(nu, nu.mode(), float(p["shift_ball_radius"])),
                                  nu, T)
    lam = nu.lambda0 * T
    x = _point(p["x"], model.n)
    rows = []
    out = Outcome(COMPARISON_COLUMNS, rows)
    for k, name in enumerate(p["functionals"]):
        if name == "one":
            F = girsanov.constant_functional(1.0)
        elif name == "zero":
            F = girsanov.constant_functional(0.0)
        elif name == "count":
            F = girsanov.jump_count_functional(T)
        elif name == "terminal":
            F = girsanov.terminal_functional(model, cfg.noise, testfunctions.from_config(
                p["terminal_f"]), x, T)
        else:
            raise InvalidInputError(f"unknown functional {name!r}; use one, zero, count, terminal")
        cmp = girsanov.girsanov_check(F, spec, cfg.replicas, cfg.seed, cfg.workers, stream=k)
        row = _comparison_row(name, cmp)
        rows.append(row)
        out.check(f"{name}: both sides agree", row["pass"], z=cmp.z_score)
        if name == "one":
            exact = 1.0 - math.exp(-lam)
            out.check("one: P(N_T >= 1) closed form",
                      abs(cmp.lhs.mean - exact) <= 4 * cmp.lhs.stderr + 1e-12, exact=exact)
        if name == "count" and spec.product_form and p["shift_ball_radius"] is None:
            ks = np.arange(0, max(50, int(lam + 20 * math.sqrt(lam) + 20)))
            exact = float(np.sum(ks * poisson_pmf(ks, lam)))
            out.check("count: Poisson sum oracle",
                      abs(cmp.lhs.mean - exact) <= 4 * cmp.lhs.stderr + 1e-12, exact=exact)
    return out


def run_mecke(cfg: ExperimentConfig) -> Outcome:
    p, nu = cfg.params, cfg.noise.jump0
    rows, failures, k = [], 0, 0
    for lam in map(float, p["intensities"]):
        T = lam / nu.lambda0
        for name, F in girsanov.mecke_suite(T).items():
            cmp = girsanov.mecke_check(F, nu, T, cfg.replicas, cfg.seed, cfg.workers, stream=k)
            k += 1
            row = _comparison_row(f"{name}@{lam:g}", cmp)
            failures += not row["pass"]
            rows.append(row)
    out = Outcome(COMPARISON_COLUMNS, rows)
    out.summary = {"failures": failures, "tests": len(rows)}
    out.check("3-sigma excursions within allowance", failures <= int(p["allowed_failures"]),
              failures=failures)
    return out


def run_berry_esseen(cfg: ExperimentConfig) -> Outcome:
    p = cfg.params
    res = coupling.berry_esseen_experiment(cfg.noise.jump0, float(p["x"]), p["t_grid"],
                                           cfg.replicas, cfg.seed, cfg.workers)
    out = Outcome(["t", "tv", "stderr", "sqrt_t_tv", "sqrt_t_stderr"], res)
    out.summary = {"moments": res[0].get("moments")}
    for r in res:
        out.check(f"sqrt(t) TV >= {p['floor']:g} at t={r['t']:g}",
                  r["sqrt_t_tv"] + 3 * r["sqrt_t_stderr"] >= p["floor"], value=r["sqrt_t_tv"])
    if len(res) >= 2:
        a, b = res[-2]["sqrt_t_tv"], res[-1]["sqrt_t_tv"]
        var = abs(b - a) / max(a, b)
        out.check(f"variation between the two largest t below {p['max_variation']:g}",
                  var < p["max_variation"], variation=var)
    out.svg = loglog_svg([{"label": "sqrt(t) TV", "x": [r["t"] for r in res],
                           "y": [r["sqrt_t_tv"] for r in res]}],
                         "Rescaled total variation", "t", "sqrt(t) TV")
    return out


RUNNERS: dict[str, Callable[[ExperimentConfig], Outcome]] = {
    "simulate": run_simulate, "tv-decay": run_tv_decay, "harnack": run_harnack, "vp": run_vp,
    "rank": run_rank, "feller": run_feller, "girsanov-check": run_girsanov,
    "mecke-check": run_mecke, "berry-esseen": run_berry_esseen,
}


def run(cfg: ExperimentConfig) -> int:
    """Run one experiment, write its files and return the exit code."""
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "resolved_config.json", "w") as fh:
        json.dump(cfg.resolved(), fh, indent=2)
    try:
        outcome = RUNNERS[cfg.kind](cfg)
    except PreconditionError as exc:
        _fail_summary(out_dir, cfg, "precondition", str(exc), getattr(exc, "hypothesis", ""))
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (InvalidInputError, ConfigError) as exc:
        _fail_summary(out_dir, cfg, "config", str(exc))
        print(f"invalid parameter: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    paths = outcome.summary.pop("_paths", None)
    if paths is not None:
        paths.write_csv(out_dir / "paths.csv")
    write_csv(out_dir / "results.csv", outcome.columns, outcome.rows)
    if outcome.svg is not None:
        (out_dir / "plot.svg").write_text(outcome.svg)
    summary = {"experiment": cfg.kind, "pass": outcome.passed, "assertions": outcome.assertions,
               **outcome.summary}
    with open(out_dir / "summary.json", "w") as fh:
        json.dump(_jsonable(summary), fh, indent=2)
    n_ok = sum(a["pass"] for a in outcome.assertions)
    print(f"{cfg.kind}: {n_ok}/{len(outcome.assertions)} assertions passed -> {out_dir}")
    for a in outcome.assertions:
        if not a["pass"]:
            print(f"  FAILED: {a['name']}", file=sys.stderr)
    return EXIT_OK if outcome.passed else EXIT_FAIL


def _fail_summary(out_dir: Path, cfg: ExperimentConfig, kind: str, message: str,
                  hypothesis: str = "") -> None:
    with open(out_dir / "summary.json", "w") as fh:
        json.dump({"experiment": cfg.kind, "pass": False, "error": kind, "message": message,
                   "hypothesis": hypothesis, "assertions": []}, fh, indent=2)


def _apply_overrides(doc: dict, args) -> dict:
    doc = dict(doc)
    for key in ("seed", "replicas", "workers"):
        if getattr(args, key) is not None:
            doc[key] = getattr(args, key)
    if args.out is not None:
        doc["output_dir"] = args.out
    return doc


def _read_doc(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}",
                          path) from None
    if not isinstance(doc, dict):
        raise ConfigError("top level must be a JSON object", path)
    return doc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="experiment config (JSON)")
    common.add_argument("--seed", type=int, help="root seed")
    common.add_argument("--replicas", type=int, help="Monte Carlo replicas")
    common.add_argument("--workers", type=int, help="worker threads")
    common.add_argument("--out", metavar="DIR", help="output directory")
    parser = argparse.ArgumentParser(
        prog="levyou", description="Monte Carlo experiments for Levy-driven OU processes.",
        epilog="exit codes: 0 pass, 1 assertion failed, 2 invalid config, 3 hypothesis fails")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name, parents=[common], help=f"run the {name} experiment")
        if name == "tv-decay":
            sp.add_argument("--t-grid", type=float, nargs="+", help="time grid")
            sp.add_argument("--method", choices=["weight", "histogram", "both"])
    mp = sub.add_parser("manifest", help="run every config listed in a manifest file")
    mp.add_argument("manifest", help="JSON list of config paths, or one path per line")
    return parser


def _run_one(kind: str, doc: dict) -> int:
    try:
        cfg = parse_config(doc, kind)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


def _run_manifest(path: str) -> int:
    base = Path(path).parent
    try:
        text = Path(path).read_text()
    except OSError as exc:
        print(f"config error: cannot read manifest: {exc.strerror}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        entries = json.loads(text)
    except json.JSONDecodeError:
        entries = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    worst = EXIT_OK
    for entry in entries:
        try:
            cfg = load_config(str(base / entry))
        except ConfigError as exc:
            print(f"config error in {entry}: {exc}", file=sys.stderr)
            worst = max(worst, EXIT_CONFIG)
            continue
        worst = max(worst, run(cfg))
    return worst


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "manifest":
        return _run_manifest(args.manifest)
    try:
        doc = _apply_overrides(_read_doc(args.config), args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "tv-decay":
        exp = dict(doc.get("experiment") or {})
        if args.t_grid:
            exp["t_grid"] = args.t_grid
        if args.method:
            exp["method"] = args.method
        if exp:
            doc["experiment"] = exp
    try:
        return _run_one(args.command, doc)
    except LevyOUError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())

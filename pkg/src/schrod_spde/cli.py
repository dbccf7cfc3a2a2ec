"""Experiment command line: config parsing, sweeps, CSV/JSON emission.

Modes
-----
rates          exact strong/weak/deterministic errors over the mesh sweep,
               rate fits, and the gated slope checks
exact-weak     weak-error column only
exact-strong   strong-error column only
deterministic  homogeneous-evolution defect only (noise ignored)
mc-crosscheck  coupled Monte Carlo against the exact values, with a
               step-doubling diagnostic of the time rule
selftest       fast structural invariant suite

The CSV contract is versioned by a leading `# schema=1` line; the JSON
summary carries the fitted slopes, gate verdicts, and the resolved
configuration. All randomness flows from the single config seed.
"""

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import fem, harness, noise, operators, spectral

CSV_COLUMNS = ("h", "N", "J", "theta", "T", "strong_exact", "strong_mc",
               "strong_stderr", "weak_exact", "weak_mc", "weak_stderr",
               "det_error", "seconds")

MODES = ("rates", "exact-weak", "exact-strong", "deterministic",
         "mc-crosscheck", "selftest")

_DEFAULTS = dict(theta=1.0, rho=1.3, scale1=1.0, scale2=1.0, T=1.0, modes=512,
                 mesh=(15, 31, 63, 127, 255), samples=10000, steps=256,
                 seed=42, phi="cos", phi_width=1.0, out="results")

_FILE_PARSERS = dict(theta=float, rho=float, scale1=float, scale2=float,
                     T=float, modes=int, samples=int, steps=int, seed=int,
                     phi_width=float, phi=str, out=str,
                     mesh=lambda s: tuple(int(p) for p in s.split(",")))


class ConfigError(ValueError):
    """Invalid experiment configuration; message names key and constraint."""


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    theta: float = 1.0
    rho: float = 1.3
    scale1: float = 1.0
    scale2: float = 1.0
    T: float = 1.0
    modes: int = 512
    mesh: tuple = (15, 31, 63, 127, 255)
    samples: int = 10000
    steps: int = 256
    seed: int = 42
    phi: str = "cos"
    phi_width: float = 1.0
    out: str = "results"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode: {self.mode!r} not one of {MODES}")
        if not 0.0 <= self.theta <= 1.0:
            raise ConfigError(f"theta: {self.theta} outside the bound [0, 1]")
        if self.rho < self.theta + 0.3:
            raise ConfigError(
                f"rho: {self.rho} violates rho >= theta + 0.3 = {self.theta + 0.3}")
        if self.scale1 < 0 or self.scale2 < 0:
            raise ConfigError("scale1/scale2: must be nonnegative")
        if self.T < 0:
            raise ConfigError(f"T: {self.T} must be nonnegative")
        if len(self.mesh) < 1 or any(n < 1 for n in self.mesh):
            raise ConfigError("mesh: need at least one positive size")
        if any(b <= a for a, b in zip(self.mesh, self.mesh[1:])):
            raise ConfigError(f"mesh: sizes {self.mesh} must be strictly increasing")
        if self.modes < 2 * max(self.mesh):
            raise ConfigError(
                f"modes: J={self.modes} must be >= twice the finest mesh size "
                f"2*{max(self.mesh)}")
        if self.samples < 2:
            raise ConfigError(f"samples: {self.samples} must be >= 2")
        if self.steps < 1:
            raise ConfigError(f"steps: {self.steps} must be >= 1")
        if self.phi not in ("cos", "linear", "bump"):
            raise ConfigError(f"phi: {self.phi!r} not one of cos/linear/bump")
        if self.phi_width <= 0:
            raise ConfigError("phi_width: must be positive")


def parse_config(mode: str, config_path=None, overrides=None) -> ExperimentConfig:
    """Resolve defaults, then the config file, then flag overrides."""
    values = dict(_DEFAULTS)
    if config_path is not None:
        try:
            with open(config_path, encoding="utf-8") as fh:
                lines = fh.readlines()
        except OSError as exc:
            raise ConfigError(f"config: cannot read {config_path}: {exc}") from exc
        for lineno, raw in enumerate(lines, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(
                    f"config: line {lineno} is not `key = value`: {line!r}")
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if key not in _FILE_PARSERS:
                raise ConfigError(f"config: unknown key {key!r} on line {lineno}")
            try:
                values[key] = _FILE_PARSERS[key](val)
            except ValueError as exc:
                raise ConfigError(
                    f"config: cannot parse {key} = {val!r}: {exc}") from exc
    for key, val in (overrides or {}).items():
        if val is not None:
            values[key] = val
    return ExperimentConfig(mode=mode, **values)


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def _write_csv(path, records):
    lines = ["# schema=1", ",".join(CSV_COLUMNS)]
    for r in records:
        lines.append(",".join([
            _fmt(r.h), repr(int(r.n_interior)), repr(int(r.n_modes)),
            _fmt(r.theta), _fmt(r.T), _fmt(r.strong_exact), _fmt(r.strong_mc),
            _fmt(r.strong_stderr), _fmt(r.weak_exact), _fmt(r.weak_mc),
            _fmt(r.weak_stderr), _fmt(r.det_error), _fmt(r.seconds)]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _workers(n_tasks: int) -> int:
    cap = os.environ.get("SCHROD_SPDE_THREADS", "1")
    try:
        cap = max(1, int(cap))
    except ValueError:
        cap = 1
    return max(1, min(cap, n_tasks))


def _sweep(mesh_sizes, row_fn):
    """Evaluate row_fn over the sweep; output order follows the size list."""
    workers = _workers(len(mesh_sizes))
    if workers == 1:
        return [row_fn(n) for n in mesh_sizes]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(row_fn, mesh_sizes))


def _functional(cfg: ExperimentConfig):
    if cfg.phi == "bump":
        return harness.gauss_bump(cfg.phi_width)
    v1, v2 = harness.default_direction(cfg.modes)
    if cfg.phi == "linear":
        return harness.linear_pairing(v1, v2)
    return harness.cos_pairing(v1, v2)


def _hs_report(spec, theta):
    try:
        retained, tail = noise.hs_check(spec, theta)
        return {"finite": True, "retained": retained, "tail_bound": tail}
    except noise.DivergenceError as exc:
        return {"finite": False, "message": str(exc)}


def _fit_or_none(hs, errs, floor=0.0):
    try:
        f = harness.fit_rate(hs, [abs(e) for e in errs], floor=floor)
        return {"slope": f.slope, "intercept": f.intercept,
                "r_squared": f.r_squared, "points_used": list(f.points_used)}
    except ValueError as exc:
        return {"error": str(exc)}


def _gates_for_rates(theta, fits):
    strong, weak = fits.get("strong_exact", {}), fits.get("weak_exact", {})
    ok = "slope" in strong and "slope" in weak
    s = strong.get("slope", float("nan"))
    w = weak.get("slope", float("nan"))
    gates = {
        "strong_slope_window": [theta - 0.15, theta + 0.25],
        "weak_slope_window": [2 * theta - 0.2, 2 * theta + 0.3],
        "strong_slope_ok": bool(ok and theta - 0.15 <= s <= theta + 0.25),
        "weak_slope_ok": bool(ok and 2 * theta - 0.2 <= w <= 2 * theta + 0.3),
        "doubling_ok": bool(ok and w >= 2 * s - 0.25),
        "r_squared_ok": bool(ok and strong.get("r_squared", 0) >= 0.98
                             and weak.get("r_squared", 0) >= 0.98),
    }
    gates["all_ok"] = all(v for k, v in gates.items() if k.endswith("_ok"))
    return gates


def run(cfg: ExperimentConfig) -> int:
    """Execute one mode; returns the process exit code."""
    print("run configuration:")
    for key, val in asdict(cfg).items():
        print(f"  {key} = {val}")

    if cfg.mode == "selftest":
        return _selftest()

    spec = noise.CovarianceSpec(cfg.modes, cfg.theta, cfg.rho,
                                cfg.scale1, cfg.scale2)
    X0 = spectral.SpectralCoeffs(
        spectral.project_function(spectral.parabola, cfg.modes),
        np.zeros(cfg.modes))
    phi = _functional(cfg)
    hs_theta = _hs_report(spec, cfg.theta)
    hs_trace = _hs_report(spec, 0.0)
    tail0 = hs_trace.get("tail_bound", 0.0) or 0.0
    # standalone truncated-tail error level for the strong norm; the fit
    # excludes points within a factor 100 of it (conservative bound, so the
    # weak column, whose truncation bias is aliasing-suppressed, is not gated)
    strong_floor = np.sqrt(cfg.T * tail0) / 100.0

    def build(n):
        mats = fem.assemble(n)
        return mats.mesh, fem.discrete_eigensystem(mats)

    summary = {"schema": 1, "mode": cfg.mode, "config": asdict(cfg),
               "hs_check": {"theta_weighted": hs_theta, "trace": hs_trace}}
    records = []

    try:
        if cfg.mode in ("rates", "exact-weak", "exact-strong", "deterministic"):
            want_strong = cfg.mode in ("rates", "exact-strong")
            want_weak = cfg.mode in ("rates", "exact-weak")
            want_det = cfg.mode in ("rates", "deterministic")

            def row(n):
                t0 = time.perf_counter()
                mesh, eig = build(n)
                se = harness.exact_strong_error(cfg.T, spec, mesh, eig, X0) \
                    if want_strong else None
                we = harness.exact_weak_error(cfg.T, spec, mesh, eig, X0, phi) \
                    if want_weak else None
                de = harness.deterministic_error(cfg.T, X0, mesh, eig) \
                    if want_det else None
                return harness.ErrorRecord(
                    h=mesh.h, n_interior=n, n_modes=cfg.modes, theta=cfg.theta,
                    T=cfg.T, strong_exact=se, weak_exact=we, det_error=de,
                    seconds=time.perf_counter() - t0)

            records = _sweep(cfg.mesh, row)
            bad = _first_nonfinite(records)
            if bad is not None:
                print(f"error: non-finite result in row N={bad.n_interior}, "
                      f"h={bad.h}", file=sys.stderr)
                return 4
            hs = [r.h for r in records]
            fits = {}
            if want_strong:
                fits["strong_exact"] = _fit_or_none(
                    hs, [r.strong_exact for r in records], floor=strong_floor)
            if want_weak:
                fits["weak_exact"] = _fit_or_none(
                    hs, [r.weak_exact for r in records])
            if want_det:
                fits["det_error"] = _fit_or_none(
                    hs, [r.det_error for r in records])
            summary["fits"] = fits
            if cfg.mode == "rates":
                summary["gates"] = _gates_for_rates(cfg.theta, fits)

        elif cfg.mode == "mc-crosscheck":
            def row(n):
                t0 = time.perf_counter()
                mesh, eig = build(n)
                se = harness.exact_strong_error(cfg.T, spec, mesh, eig, X0)
                we = harness.exact_weak_error(cfg.T, spec, mesh, eig, X0, phi) \
                    if phi.kind != "gauss-bump" else None
                mc = harness.mc_estimate(cfg.T, spec, mesh, eig, X0, phi,
                                         cfg.samples, cfg.steps, cfg.seed)
                rec = harness.ErrorRecord(
                    h=mesh.h, n_interior=n, n_modes=cfg.modes, theta=cfg.theta,
                    T=cfg.T, strong_exact=se, strong_mc=mc.strong,
                    strong_stderr=mc.strong_stderr, weak_exact=we,
                    weak_mc=mc.weak, weak_stderr=mc.weak_stderr,
                    seconds=time.perf_counter() - t0)
                return rec, _k_doubling(cfg, spec, mesh, eig, X0, phi)

            out = [row(n) for n in cfg.mesh]
            records = [r for r, _ in out]
            bad = _first_nonfinite(records)
            if bad is not None:
                print(f"error: non-finite result in row N={bad.n_interior}, "
                      f"h={bad.h}", file=sys.stderr)
                return 4
            summary["k_doubling"] = {str(n): kd for n, (_, kd) in
                                     zip(cfg.mesh, out)}
            checks = []
            for r in records:
                # roundoff allowance keeps the zero-variance degenerate case honest
                s_ok = abs(r.strong_mc - r.strong_exact) \
                    <= 3 * r.strong_stderr + 1e-12 * (1 + abs(r.strong_exact))
                w_ok = True
                if r.weak_exact is not None:
                    w_ok = abs(r.weak_mc - r.weak_exact) \
                        <= 3 * r.weak_stderr + 1e-12 * (1 + abs(r.weak_exact))
                checks.append({"N": r.n_interior, "strong_ok": bool(s_ok),
                               "weak_ok": bool(w_ok)})
            summary["gates"] = {"rows": checks,
                                "all_ok": all(c["strong_ok"] and c["weak_ok"]
                                              for c in checks)}
        else:  # pragma: no cover
            raise ConfigError(f"unhandled mode {cfg.mode}")
    except (noise.DivergenceError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4

    csv_path, json_path = cfg.out + ".csv", cfg.out + ".json"
    try:
        _write_csv(csv_path, records)
        with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {csv_path} and {json_path}")

    gates = summary.get("gates")
    if gates is not None and not gates.get("all_ok", True):
        print("gated checks FAILED", file=sys.stderr)
        return 1
    return 0


def _first_nonfinite(records):
    for r in records:
        values = (r.strong_exact, r.strong_mc, r.weak_exact, r.weak_mc,
                  r.det_error)
        if any(v is not None and not np.isfinite(v) for v in values):
            return r
    return None


def _k_doubling(cfg, spec, mesh, eig, X0, phi, probe_samples=1000,
                max_doublings=3):
    """Double the time steps until the probed strong error moves < 5%."""
    k = cfg.steps
    prev = harness.mc_estimate(cfg.T, spec, mesh, eig, X0, phi,
                               min(cfg.samples, probe_samples), k, cfg.seed,
                               compute_weak=False).strong
    history = [{"steps": k, "strong_mc": prev}]
    converged = False
    for _ in range(max_doublings):
        k *= 2
        cur = harness.mc_estimate(cfg.T, spec, mesh, eig, X0, phi,
                                  min(cfg.samples, probe_samples), k, cfg.seed,
                                  compute_weak=False).strong
        history.append({"steps": k, "strong_mc": cur})
        if prev > 0 and abs(cur - prev) / prev < 0.05:
            converged = True
            break
        prev = cur
    return {"converged": converged, "history": history}


def _selftest() -> int:
    """Fast structural checks; prints one verdict line per suite."""
    failures = 0

    def report(name, ok):
        nonlocal failures
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        failures += 0 if ok else 1

    rng = np.random.default_rng(20240601)
    ok = True
    for _ in range(100):
        na, nb = rng.integers(2, 13), rng.integers(2, 13)
        a = rng.standard_normal((na, nb))
        b = rng.standard_normal((nb, na))
        ab, ba = a @ b, b @ a
        tol = 1e-10
        ok &= abs(operators.trace(ab) - operators.trace(ba)) \
            <= tol * (1 + abs(operators.trace(ab)))
        ok &= abs(operators.trace(ab)) \
            <= operators.trace_norm(a) * operators.operator_norm(b) + tol
        ok &= operators.trace_norm(ab) \
            <= operators.trace_norm(a) * operators.operator_norm(b) + tol
        ok &= operators.trace_norm(ab) \
            <= operators.hs_norm(a) * operators.hs_norm(b) + tol
        ok &= abs(operators.trace(ab) - operators.trace(ab.T)) <= tol
    report("operator trace/norm inequalities (100 seeded pairs)", ok)

    J = 64
    x0 = spectral.SpectralCoeffs(rng.standard_normal(J), rng.standard_normal(J))
    y = spectral.apply_group(0.3, spectral.apply_group(0.9, x0))
    z = spectral.apply_group(1.2, x0)
    ok = max(np.abs(y.a - z.a).max(), np.abs(y.b - z.b).max()) <= 1e-10
    ok &= abs(spectral.pair_norm(z) - spectral.pair_norm(x0)) <= 1e-10
    report("rotation group law and isometry", ok)

    mats = fem.assemble(31)
    eig = fem.discrete_eigensystem(mats)
    lam = spectral.eigenvalues(31)
    ok = np.all(eig.lambdas >= lam - 1e-9)
    ok &= np.abs(eig.vectors.T @ mats.mass @ eig.vectors - np.eye(31)).max() <= 1e-10
    nodal = mats.mesh.nodes * (1 - mats.mesh.nodes)
    proj = fem.l2_project(lambda x: np.interp(x, np.concatenate(
        [[0.0], mats.mesh.nodes, [1.0]]), np.concatenate([[0.0], nodal, [0.0]])),
        mats.mesh)
    ok &= np.abs(proj - nodal).max() <= 1e-10
    report("discrete eigenpairs, eigenvalue bound, projection identity", ok)

    spec = noise.CovarianceSpec(J, 0.5, 1.0)
    law = spectral.stochastic_convolution_law(
        1.0, spec, spectral.SpectralCoeffs(np.zeros(J), np.zeros(J)))
    expected = 1.0 * (spec.q1 + spec.q2).sum()
    ok = abs(spectral.gaussian_functional(law, kind="squared-norm") - expected) \
        <= 1e-10 * expected
    report("solution-law trace identity", ok)

    x = np.linspace(-20.0, 20.0, 2001)
    for freq in (0.0, 1e-6, 1e-3, 2.0, 97.0):
        grid = np.linspace(0.0, 0.7, 20001)
        ref_c = np.trapezoid(np.cos(freq * grid), grid)
        ref_s = np.trapezoid(np.sin(freq * grid), grid)
        ok &= abs(fem.intcos(freq, 0.7) - ref_c) <= 1e-7
        ok &= abs(fem.intsin(freq, 0.7) - ref_s) <= 1e-7
    report("resonance-safe time integrals vs quadrature", ok)

    print("selftest:", "all suites passed" if failures == 0
          else f"{failures} suite(s) failed")
    return 0 if failures == 0 else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="schrod-spde",
        description="Convergence-rate experiments for the semidiscrete "
                    "stochastic Schrodinger solver")
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--config", metavar="PATH", default=None)
    parser.add_argument("--theta", type=float, default=None)
    parser.add_argument("--rho", type=float, default=None)
    parser.add_argument("--T", type=float, default=None)
    parser.add_argument("--modes", type=int, default=None, metavar="J")
    parser.add_argument("--mesh", type=str, default=None, metavar="N1,N2,...")
    parser.add_argument("--samples", type=int, default=None)
    parser.add_argument("--steps", type=int, default=None, metavar="K")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--phi", choices=("cos", "linear", "bump"), default=None)
    parser.add_argument("--out", type=str, default=None, metavar="PATH")
    args = parser.parse_args(argv)

    overrides = {k: getattr(args, k) for k in
                 ("theta", "rho", "T", "modes", "samples", "steps", "seed",
                  "phi", "out")}
    if args.mesh is not None:
        try:
            overrides["mesh"] = tuple(int(p) for p in args.mesh.split(","))
        except ValueError:
            print(f"error: cannot parse --mesh {args.mesh!r}", file=sys.stderr)
            return 2
    try:
        cfg = parse_config(args.mode, args.config, overrides)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

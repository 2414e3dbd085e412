"""Command-line front end.

Human-readable summaries go to stdout; JSON reports, CSV series and a run
manifest go to the output directory (``--out-dir``, or $TORUSLAB_OUT, or the
current directory).

Exit codes:
    0  ok
    1  input could not be parsed
    2  matrix is not an (ergodic, where required) automorphism
    3  escape cap exceeded while computing sigma^2
    4  a requested coefficient condition fails
    5  statistical acceptance failed (after the two-strike retry)
    6  degenerate variance (sigma^2 = 0)
    7  manifest replay produced different output hashes
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

from . import SCHEMA_VERSION, __version__, covariance, observable, stats_harness
from .errors import (DegenerateGrid, DegenerateVariance, EscapeCapExceeded, InsufficientSamples,
                     NotErgodic, NotUnimodular, ToruslabError)
from .matrix_core import IntegerMatrix, ToralAutomorphism, classify
from .orbit_engine import DEFAULT_Q

EXIT_OK, EXIT_PARSE, EXIT_NOT_AUT, EXIT_CAP, EXIT_CONDITION = 0, 1, 2, 3, 4
EXIT_STATS, EXIT_DEGENERATE, EXIT_REPLAY = 5, 6, 7
OUT_ENV = "TORUSLAB_OUT"


class ParseFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage; here 2 means "not an automorphism"."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def _load_matrix(arg: str) -> IntegerMatrix:
    try:
        text = Path(arg).read_text() if os.path.isfile(arg) else arg
        return IntegerMatrix.parse(text)
    except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ParseFailure(f"cannot parse matrix {arg!r}: {exc}") from exc


def _load_observable(arg: str):
    try:
        text = Path(arg).read_text() if os.path.isfile(arg) else arg
        return observable.from_json(json.loads(text))
    except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ParseFailure(f"cannot parse observable {arg!r}: {exc}") from exc


def _int_list(text: str) -> list:
    try:
        return [int(float(t)) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class Run:
    """Collects emitted files and writes the manifest at the end."""

    def __init__(self, args, inputs: dict):
        self.args = args
        self.out_dir = Path(args.out_dir or os.environ.get(OUT_ENV, "."))
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.inputs = inputs
        self.outputs = []
        self.started = _dt.datetime.now(_dt.timezone.utc).isoformat()

    def write_json(self, name: str, obj: dict) -> Path:
        path = self.out_dir / name
        path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
        self.outputs.append(path)
        return path

    def write_csv(self, name: str, header: list, rows) -> Path:
        path = self.out_dir / name
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for r in rows:
                w.writerow([repr(v) if isinstance(v, float) else v for v in r])
        self.outputs.append(path)
        return path

    def finish(self) -> Path:
        manifest = {
            "schema": SCHEMA_VERSION,
            "command": self.args.command,
            "arguments": _replayable_args(self.args),
            "inputs": self.inputs,
            "seed": getattr(self.args, "seed", None),
            "versions": {"toruslab": __version__, "schema": SCHEMA_VERSION},
            "started": self.started,
            "finished": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "outputs": [{"path": p.name, "sha256": _sha256(p)} for p in self.outputs],
        }
        path = self.out_dir / f"{self.args.command}.manifest.json"
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return path


_NOT_REPLAYED = {"command", "out_dir", "matrix", "observable", "manifest_only", "func"}


def _replayable_args(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in _NOT_REPLAYED}


# -- subcommands -----------------------------------------------------------------

def cmd_classify(args) -> int:
    m = _load_matrix(args.matrix)
    cls = classify(m, args.precision)
    run = Run(args, {"matrix": m.to_json()})
    run.write_json("classify.json", cls.to_json())
    run.finish()
    print(f"char poly: {cls.char_poly}")
    print(cls.summary())
    print(f"spectral radius in [{cls.spectral_radius.lo!r}, {cls.spectral_radius.hi!r}]")
    if not cls.is_automorphism:
        print(f"not an automorphism: det = {cls.det}", file=sys.stderr)
        return EXIT_NOT_AUT
    return EXIT_OK


def _automorphism(m: IntegerMatrix) -> ToralAutomorphism:
    T = ToralAutomorphism.from_matrix(m)
    if not T.is_ergodic:
        raise NotErgodic(f"{T.classification.summary()}: an ergodic automorphism is required")
    return T


def cmd_sigma2(args) -> int:
    m = _load_matrix(args.matrix)
    f = _load_observable(args.observable)
    T = _automorphism(m)
    rep = covariance.sigma2(f, T, cap=args.cap)
    run = Run(args, {"matrix": m.to_json(), "observable": f.to_json()})
    run.write_json("sigma2.json", rep.to_json(moments=args.moments or ()))
    run.finish()
    print(f"sigma2 = {rep.sigma2!r}  (N0 = {rep.N0}, degenerate: {str(rep.degenerate).lower()})")
    for n in args.moments or ():
        print(f"E(S_{n}^2) = {rep.second_moment(n)!r}")
    return EXIT_OK


def cmd_check(args) -> int:
    f = _load_observable(args.observable)
    spec = observable.ConditionSpec(args.p, args.theta, args.beta, args.R, tuple(args.b_grid))
    rep = observable.check_conditions(f, spec)
    run = Run(args, {"observable": f.to_json()})
    run.write_json("check.json", rep.to_json())
    run.finish()
    print(f"condF1 (theta={spec.theta} vs required > {rep.theta_required_F1:.6g}): "
          f"{'satisfied' if rep.satisfied_F1 else 'NOT satisfied'}; smallest R = {rep.min_R_F1:.6g}")
    print(f"condF2 (beta={spec.beta} vs required > {rep.beta_required_F2:.6g}): "
          f"{'satisfied' if rep.satisfied_F2 else 'NOT satisfied'}; smallest R = {rep.min_R_F2:.6g}")
    wanted = {"F1": [rep.satisfied_F1], "F2": [rep.satisfied_F2],
              "both": [rep.satisfied_F1, rep.satisfied_F2]}[args.require]
    return EXIT_OK if all(wanted) else EXIT_CONDITION


def _plan(args, T, f) -> stats_harness.ExperimentPlan:
    return stats_harness.ExperimentPlan(T, f, args.n, args.samples, int(args.q), args.seed, args.workers)


def _stats_inputs(args):
    m = _load_matrix(args.matrix)
    f = _load_observable(args.observable)
    return m, f, _automorphism(m)


def _two_strike(fn, plan):
    first = fn(plan)
    if first.passed:
        return first, [plan.seed]
    second = fn(plan.with_seed(plan.seed + 1))
    return second, [plan.seed, plan.seed + 1]


@dataclass
class _SimulateResult:
    growth: stats_harness.VarianceGrowthReport
    decor: stats_harness.DecorrelationReport

    @classmethod
    def run(cls, plan, grid, lags, report):
        return cls(stats_harness.run_variance_growth(plan, grid, report),
                   stats_harness.run_decorrelation(plan, lags))

    @property
    def passed(self) -> bool:
        return self.growth.passed and self.decor.passed


def cmd_simulate(args) -> int:
    m, f, T = _stats_inputs(args)
    plan = _plan(args, T, f)
    rep = covariance.sigma2(f, T)
    grid = args.grid or [args.n]
    lags = args.lags

    res, seeds = _two_strike(lambda p: _SimulateResult.run(p, grid, lags, rep), plan)
    run = Run(args, {"matrix": m.to_json(), "observable": f.to_json()})
    run.write_json("simulate.json", {
        "schema": SCHEMA_VERSION, "kind": "simulate", "seeds_tried": seeds, "passed": res.passed,
        "variance_growth": res.growth.to_json(), "decorrelation": res.decor.to_json(),
    })
    run.write_csv("simulate_variance.csv", ["n", "empirical", "stderr", "exact"],
                  [(r.n, r.empirical, r.stderr, r.exact) for r in res.growth.rows])
    run.write_csv("simulate_decorrelation.csv", ["lag", "empirical", "stderr", "exact"],
                  [(r.lag, r.empirical, r.stderr, r.exact) for r in res.decor.rows])
    run.finish()
    for r in res.growth.rows:
        print(f"n={r.n}: E(S_n^2)/n = {r.empirical:.6g} +- {r.stderr:.2g} (exact {r.exact:.6g})")
    for r in res.decor.rows:
        print(f"lag {r.lag}: Cov = {r.empirical:.6g} +- {r.stderr:.2g} (exact {r.exact:.6g})")
    return EXIT_OK if res.passed else EXIT_STATS


def cmd_clt(args) -> int:
    m, f, T = _stats_inputs(args)
    rep = stats_harness.run_clt(_plan(args, T, f))
    run = Run(args, {"matrix": m.to_json(), "observable": f.to_json()})
    run.write_json("clt.json", rep.to_json())
    run.finish()
    print(f"KS distance {rep.ks_distance:.5f} vs 95% critical {rep.ks_critical_95:.5f}; "
          f"E(S_n^2)/n = {rep.empirical_var_over_n:.5g} (exact {rep.exact_var_over_n:.5g}); "
          f"{'pass' if rep.passed else 'FAIL'}")
    return EXIT_OK if rep.passed else EXIT_STATS


def cmd_scaling(args) -> int:
    m, f, T = _stats_inputs(args)
    grid = args.grid or [100, 1000, 10000, 100000]
    plan = stats_harness.ExperimentPlan(T, f, max(grid), args.samples, int(args.q), args.seed,
                                        args.workers)
    rep = stats_harness.run_scaling(plan, grid)
    run = Run(args, {"matrix": m.to_json(), "observable": f.to_json()})
    run.write_json("scaling.json", rep.to_json())
    run.write_csv("scaling.csv", ["n", "mean_abs_max", "stderr"],
                  list(zip(rep.grid, rep.mean_abs_max, rep.stderr)))
    run.finish()
    print(f"fitted exponent of E max|S_k|: {rep.fitted_exponent:.4f} +- {rep.exponent_stderr:.2g}")
    return EXIT_OK


# -- replay --------------------------------------------------------------------

def replay(manifest_path: str) -> int:
    manifest = json.loads(Path(manifest_path).read_text())
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        argv = [manifest["command"]]
        for key in ("matrix", "observable"):
            if key in manifest["inputs"]:
                p = tmp / f"{key}.json"
                p.write_text(json.dumps(manifest["inputs"][key]))
                argv.append(str(p))
        out = tmp / "out"
        argv += ["--out-dir", str(out)]
        for key, value in manifest["arguments"].items():
            if value is None:
                continue
            flag = "--" + key.replace("_", "-")
            argv += [flag, ",".join(map(str, value)) if isinstance(value, list) else str(value)]
        main(argv)
        mismatched = []
        for entry in manifest["outputs"]:
            p = out / entry["path"]
            if not p.exists() or _sha256(p) != entry["sha256"]:
                mismatched.append(entry["path"])
    if mismatched:
        print(f"replay mismatch: {', '.join(mismatched)}", file=sys.stderr)
        return EXIT_REPLAY
    print(f"replay ok: {len(manifest['outputs'])} outputs reproduced")
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="toruslab",
        description="Ergodic toral automorphisms: classification, exact sigma^2, "
                    "coefficient conditions and Monte Carlo checks.",
        epilog=__doc__.split("\n\n", 2)[2], formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--manifest-only", metavar="MANIFEST",
                        help="replay a run manifest and verify the output hashes")
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--out-dir", help=f"output directory (default ${OUT_ENV} or .)")

    p = sub.add_parser("classify", help="spectral classification of a matrix")
    p.add_argument("matrix", help='matrix JSON file, JSON text, or literal "a,b;c,d"')
    p.add_argument("--precision", type=int, default=128, help="certification precision in bits")
    common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("sigma2", help="exact asymptotic variance for a trigonometric polynomial")
    p.add_argument("matrix")
    p.add_argument("observable", help="observable JSON file or text")
    p.add_argument("--cap", type=int, default=None, help="escape iteration cap")
    p.add_argument("--moments", type=_int_list, default=None,
                   help="also report E(S_n^2) at these n (comma-separated)")
    common(p)
    p.set_defaults(func=cmd_sigma2)

    p = sub.add_parser("check", help="tail-sum conditions on Fourier coefficients")
    p.add_argument("observable")
    p.add_argument("--p", type=float, default=4.0)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--b-grid", type=_int_list, required=True)
    p.add_argument("--require", choices=["F1", "F2", "both"], default="both")
    common(p)
    p.set_defaults(func=cmd_check)

    def plan_flags(p, n_default, samples_default):
        p.add_argument("matrix")
        p.add_argument("observable")
        p.add_argument("--n", type=int, default=n_default)
        p.add_argument("--samples", type=int, default=samples_default)
        p.add_argument("--q", type=int, default=DEFAULT_Q)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--workers", type=int, default=1)
        common(p)

    p = sub.add_parser("simulate", help="variance growth and decorrelation against exact values")
    plan_flags(p, 1000, 10000)
    p.add_argument("--grid", type=_int_list, default=None)
    p.add_argument("--lags", type=_int_list, default=[0, 1, 2, 3])
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("clt", help="KS test of S_n / (sigma sqrt n) against N(0, 1)")
    plan_flags(p, 10000, 10000)
    p.set_defaults(func=cmd_clt)

    p = sub.add_parser("scaling", help="growth exponent of E max_k |S_k|")
    plan_flags(p, 100000, 1000)
    p.add_argument("--grid", type=_int_list, default=None)
    p.set_defaults(func=cmd_scaling)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.manifest_only:
        return replay(args.manifest_only)
    if not args.command:
        parser.print_help()
        return EXIT_PARSE
    try:
        return args.func(args)
    except ParseFailure as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_PARSE
    except ToruslabError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return _exit_code(exc)


def _exit_code(exc: ToruslabError) -> int:
    for kinds, code in ((NotUnimodular, EXIT_NOT_AUT), (NotErgodic, EXIT_NOT_AUT),
                        (EscapeCapExceeded, EXIT_CAP), (DegenerateVariance, EXIT_DEGENERATE),
                        ((DegenerateGrid, InsufficientSamples), EXIT_STATS)):
        if isinstance(exc, kinds):
            return code
    return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())

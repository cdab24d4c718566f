"""Command-line entry point: ``dachains <command> [options]``.

Exit codes: 0 success, 1 usage error, 2 numeric failure, 3 property failure.
Every command that takes ``--out`` writes a ``manifest.json`` next to its
outputs; ``dachains replay DIR/manifest.json`` re-runs it.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, bernoulli, chains, io, kernel, normal, verify
from .config import TOLERANCES
from .errors import CapExceededError, ConvergenceError, DegeneratePointError, NonErgodicError

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_PROPERTY = 0, 1, 2, 3
DEFAULT_RHOS = (1 / 10, 1 / 5, 1 / 3, 9 / 20)
BUNDLED = {"dataset1": "dataset1.txt", "dataset2": "dataset2.txt"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text):
    try:
        return [float(eval_fraction(t)) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def eval_fraction(token):
    token = token.strip()
    if "/" in token:
        num, den = token.split("/", 1)
        return float(num) / float(den)
    return float(token)


def _int_list(text):
    return [int(t) for t in text.split(",") if t.strip()]


def load_data(source):
    """A bundled dataset name (``dataset1``/``dataset2``) or a file path."""
    if source in BUNDLED:
        text = resources.files("dachains").joinpath("data", BUNDLED[source]).read_text()
        return io.parse_data(text, source)
    if not Path(source).exists():
        raise UsageError(f"data file not found: {source}")
    return io.read_data(source)


def _write_manifest(out, command, argv, params, seed, outputs):
    manifest = {
        "command": command,
        "argv": argv,
        "parameters": params,
        "seed": seed,
        "version": __version__,
        "outputs": sorted(outputs),
    }
    path = Path(out) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def _fmt_matrix(M):
    return "\n".join("  " + "  ".join(f"{x:.5f}" for x in row) for row in M)


def cmd_bernoulli_exact(args):
    cfg = bernoulli.BernoulliConfig(args.rho, args.m, args.m // 2 if args.m1 is None else args.m1)
    pi = bernoulli.posterior(cfg)
    mda = bernoulli.mda_mtm(cfg)
    fs = bernoulli.fs_mtm(cfg)
    cf = bernoulli.closed_form_eigenvalues(cfg)
    num_mda = kernel.spectrum(mda, pi).eigenvalues
    num_fs = kernel.spectrum(fs, pi).eigenvalues
    gap = max(
        kernel.spectra_distance(num_mda, cf.eigenvalues()),
        kernel.spectra_distance(num_fs, [cf.lambda2, 0.0, 0.0]),
    )

    print(f"rho={cfg.rho:g} m={cfg.m} m1={cfg.m1}")
    print("posterior: " + "  ".join(f"{lab}={p:.5f}" for lab, p in zip(bernoulli.STATE_LABELS, pi)))
    print("MDA matrix:\n" + _fmt_matrix(mda))
    print("FS matrix:\n" + _fmt_matrix(fs))
    print(f"closed form: lambda1={cf.lambda1:.5f} lambda2={cf.lambda2:.5f} lambda3=0")
    print("numeric MDA: " + " ".join(f"{v:.5f}" for v in num_mda))
    print("numeric FS:  " + " ".join(f"{v:.5f}" for v in num_fs))
    print(f"closed-form vs numeric max gap: {gap:.3e}")

    rows = [("posterior", i, repr(float(p))) for i, p in enumerate(pi)]
    rows += [("mda_closed_form", i + 1, repr(float(v))) for i, v in enumerate(cf.eigenvalues())]
    rows += [("mda_numeric", i + 1, repr(float(v))) for i, v in enumerate(num_mda)]
    rows += [("fs_numeric", i + 1, repr(float(v))) for i, v in enumerate(num_fs)]
    header = ("quantity", "index", "value")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        io.write_csv(out / "bernoulli_exact.csv", header, rows)
        io.write_matrix(out / "mda_matrix.txt", mda)
        io.write_matrix(out / "fs_matrix.txt", fs)
        names = ["bernoulli_exact.csv", "mda_matrix.txt", "fs_matrix.txt"]
        _write_manifest(out, "bernoulli-exact", args.argv, {"rho": cfg.rho, "m": cfg.m, "m1": cfg.m1}, None, names)
    if gap > 1e-8:
        print("closed-form and numeric spectra disagree", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_sweep(args):
    ms = list(range(args.m_min, args.m_max + 1, args.m_step)) if args.m_step > 0 else []
    rows = bernoulli.eigenvalue_sweep(args.rhos, ms, args.chain, m1=args.m1)
    header = ("rho", "m", "m1", "chain", "dominant", "gap")
    rows = [(repr(r), m, m1, c, repr(float(d)), repr(float(g))) for r, m, m1, c, d, g in rows]
    _emit_csv(args, f"sweep_{args.chain}.csv", header, rows, "sweep",
              {"rhos": args.rhos, "m_min": args.m_min, "m_max": args.m_max,
               "m_step": args.m_step, "chain": args.chain, "m1": args.m1}, None)
    return EXIT_OK


def _emit_csv(args, name, header, rows, command, params, seed, extra=()):
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        io.write_csv(out / name, header, rows)
        _write_manifest(out, command, args.argv, params, seed, [name, *extra])
    else:
        import csv

        writer = csv.writer(sys.stdout)
        writer.writerow(header)
        writer.writerows(rows)


def cmd_normal(args):
    z = load_data(args.data)
    ms = args.ms if args.ms else list(range(1, min(len(z), args.m_max) + 1))
    if any(m > len(z) or m < 1 for m in ms):
        raise UsageError(f"prefix sizes must lie in 1..{len(z)}")
    if max(ms) > TOLERANCES.max_m:
        raise CapExceededError(f"m={max(ms)} exceeds the cap of {TOLERANCES.max_m}")
    variants = ("mda", "fs") if args.chain == "both" else (args.chain,)
    rows = []
    dumps = []
    problem = normal.NormalMixtureProblem(tuple(z))
    for m in ms:
        for variant in variants:
            settings = normal.EstimationSettings(args.row_samples, args.seed, variant)
            K = normal.estimate_conjugate_matrix(problem.prefix(m), settings)
            lam = kernel.dominant_eigenvalue(K)
            rows.append((m, variant, repr(float(lam)), args.seed, args.row_samples))
            if args.dump_matrices and args.out:
                name = f"matrix_{variant}_m{m}.txt"
                Path(args.out).mkdir(parents=True, exist_ok=True)
                io.write_matrix(Path(args.out) / name, K)
                dumps.append(name)
    header = ("m", "variant", "lambda_hat", "seed", "N")
    _emit_csv(args, "normal_eigenvalues.csv", header, rows, "normal",
              {"data": args.data, "ms": ms, "chain": args.chain, "row_samples": args.row_samples},
              args.seed, dumps)
    return EXIT_OK


def cmd_simulate(args):
    out = Path(args.out) if args.out else None
    if args.model == "bernoulli":
        cfg = bernoulli.BernoulliConfig(args.rho, args.m, args.m // 2 if args.m1 is None else args.m1)
        trace = chains.run_bernoulli(cfg, args.chain, args.iters, args.seed, burn_in=args.burn_in)
        report = chains.sojourn_analysis(trace, n_states=4).as_dict()
        params = {"model": "bernoulli", "rho": cfg.rho, "m": cfg.m, "m1": cfg.m1}
    else:
        z = load_data(args.data)
        problem = normal.NormalMixtureProblem(tuple(z[: args.m] if args.m else z))
        trace = chains.run_normal(problem, args.chain, args.iters, args.seed, burn_in=args.burn_in)
        s = trace.states
        report = {
            "mean": dict(zip(("mu1", "mu2", "tau2_1", "tau2_2", "p"), map(float, s.mean(axis=0)))),
            "length": trace.length,
        }
        params = {"model": "normal", "data": args.data, "m": problem.m}
    params.update(chain=args.chain, iters=args.iters, burn_in=args.burn_in)
    text = json.dumps(report, indent=2)
    print(text)
    if out:
        out.mkdir(parents=True, exist_ok=True)
        io.write_csv(out / "trace.csv", trace.header(), trace.rows())
        (out / "sojourn.json").write_text(text + "\n")
        _write_manifest(out, "simulate", args.argv, params, args.seed, ["trace.csv", "sojourn.json"])
    return EXIT_OK


def cmd_verify(args):
    results = verify.run_checks()
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{'PASS' if r.ok else 'FAIL'}  {r.name:<{width}}  {r.detail}")
    failed = [r.name for r in results if not r.ok]
    print(f"{len(results) - len(failed)}/{len(results)} properties passed")
    if failed:
        print("failed: " + ", ".join(failed), file=sys.stderr)
        return EXIT_PROPERTY
    return EXIT_OK


def cmd_replay(args):
    manifest = json.loads(Path(args.manifest).read_text())
    return main(manifest["argv"])


def build_parser():
    p = _Parser(prog="dachains", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common_bernoulli(sp, m_default=10):
        sp.add_argument("--rho", type=eval_fraction, default=0.1)
        sp.add_argument("--m", type=int, default=m_default)
        sp.add_argument("--m1", type=int, default=None, help="successes (default m // 2)")

    sp = sub.add_parser("bernoulli-exact", help="exact 4x4 analysis of the Bernoulli mixture")
    common_bernoulli(sp)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_bernoulli_exact)

    sp = sub.add_parser("sweep", help="dominant eigenvalue over a (rho, m) grid")
    sp.add_argument("--rhos", type=_float_list, default=list(DEFAULT_RHOS))
    sp.add_argument("--m-min", type=int, default=2)
    sp.add_argument("--m-max", type=int, default=100)
    sp.add_argument("--m-step", type=int, default=2)
    sp.add_argument("--m1", type=int, default=None)
    sp.add_argument("--chain", choices=("mda", "fs"), default="mda")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("normal", help="Monte Carlo eigenvalue curve for the normal mixture")
    sp.add_argument("--data", default="dataset1", help="file or bundled name dataset1/dataset2")
    sp.add_argument("--chain", "--variant", dest="chain", choices=("mda", "fs", "both"), default="both")
    sp.add_argument("--row-samples", "--rows-samples", dest="row_samples", type=int, default=20_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--ms", type=_int_list, default=None, help="comma-separated prefix sizes")
    sp.add_argument("--m-max", type=int, default=10)
    sp.add_argument("--dump-matrices", action="store_true")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_normal)

    sp = sub.add_parser("simulate", help="run a chain and report sojourn statistics")
    sp.add_argument("--model", choices=("bernoulli", "normal"), default="bernoulli")
    sp.add_argument("--chain", choices=("mda", "fs"), default="mda")
    sp.add_argument("--iters", type=int, default=100_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--burn-in", type=int, default=0)
    sp.add_argument("--rho", type=eval_fraction, default=0.1)
    sp.add_argument("--m", type=int, default=None)
    sp.add_argument("--m1", type=int, default=None)
    sp.add_argument("--data", default="dataset1")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("verify", help="run the property suite")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    sp.add_argument("manifest")
    sp.set_defaults(func=cmd_replay)
    return p


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    args.argv = argv
    if getattr(args, "command", None) == "simulate" and args.model == "bernoulli" and args.m is None:
        args.m = 10
    try:
        return args.func(args)
    except (UsageError, CapExceededError, ValueError) as exc:
        if isinstance(exc, (NonErgodicError, DegeneratePointError)):
            print(f"numeric failure: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        print(f"dachains: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

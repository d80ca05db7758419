"""Command-line entry point: ``blockspin <subcommand> ...``.

Exit codes: 0 ok, 2 invalid config or arguments, 3 resource limit, 4 IO failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import exact
from .errors import ConfigError, ResourceLimitError
from .experiment import CHAIN_INITS, ExperimentConfig, rows_to_csv, run_experiment, sweep
from .glauber import RULES
from .graph import BlockGraph, gen_graph
from .hamiltonian import ModelParams
from .meanfield import classify_phase, free_energy_variational, rate_function

EXIT_OK, EXIT_CONFIG, EXIT_RESOURCE, EXIT_IO = 0, 2, 3, 4


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def cmd_graph(args):
    g = gen_graph(args.n, args.p, args.q, args.seed, directed=not args.undirected)
    _emit(g.to_json(), args.out)


def _experiment_config(args) -> ExperimentConfig:
    overrides = {
        "n": args.n, "p": args.p, "q": args.q, "beta": args.beta, "alpha": args.alpha,
        "a_override": args.a, "chains": args.chains, "sweeps": args.sweeps,
        "burnin": args.burnin, "thin": args.thin, "base_seed": args.seed,
        "graph_seed": args.graph_seed, "init": args.init, "rule": args.rule,
        "graph_path": args.graph, "out_dir": getattr(args, "out_dir", None),
    }
    if args.undirected:
        overrides["directed"] = False
    if args.config:
        return ExperimentConfig.from_json_file(args.config, **overrides)
    return ExperimentConfig.from_dict({}, **overrides)


def cmd_sample(args):
    res = run_experiment(_experiment_config(args))
    _emit(_json(res.summary.to_dict()), None)


def cmd_sweep(args):
    args.beta = args.beta if args.beta is not None else 1.0
    args.alpha = args.alpha if args.alpha is not None else 0.0
    base = _experiment_config(args)
    rows = sweep(base, _floats(args.betas), _floats(args.alpha_as))
    _emit(rows_to_csv(rows), args.out)


def cmd_exact(args):
    g = BlockGraph.load(args.graph)
    params = ModelParams.for_graph(g, args.beta, args.alpha, args.a)
    sw = exact.sandwich_check(g, params, c=args.gamma_c)
    law = exact.enumerate_gibbs(g, params)
    _emit(_json({
        "log_Z": sw.log_z,
        "log_Z_tilde": sw.log_z_tilde,
        "bound": sw.bound,
        "lower_slack": sw.lower_slack,
        "upper_slack": sw.upper_slack,
        "distribution": law.rows(),
    }), args.out)


def cmd_phase(args):
    a = args.a
    if a is None:
        if args.p is None or args.q is None:
            raise ConfigError("phase needs --a or both --p and --q")
        a = args.q / args.p
    _emit(_json(classify_phase(args.beta, args.alpha * a).to_dict()), args.out)


def cmd_rate(args):
    if args.grid < 2:
        raise ConfigError("--grid must be at least 2")
    xs = np.linspace(-0.5, 0.5, args.grid)
    x1, x2 = np.meshgrid(xs, xs, indexing="ij")
    vals = rate_function(np.stack([x1, x2], axis=-1), args.beta, args.lam)
    lines = ["x1,x2,J"]
    lines += [f"{a!r},{b!r},{v!r}" for a, b, v in
              zip(x1.ravel().tolist(), x2.ravel().tolist(), np.ravel(vals).tolist())]
    _emit("\n".join(lines) + "\n", args.out)


def cmd_free_energy(args):
    f = free_energy_variational(args.beta, args.lam)
    finite = []
    for n in args.n or []:
        if n < 2 or n % 2:
            raise ConfigError(f"n must be even and >= 2, got {n}")
        per_site = exact.log_partition_complete(n, args.beta, args.lam) / n
        finite.append({"n": n, "log_Z_tilde_per_site": per_site, "gap": abs(per_site - f)})
    _emit(_json({"beta": args.beta, "lambda": args.lam, "f_variational": f, "finite_n": finite}),
          args.out)


def _add_experiment_args(sp, *, model_required: bool):
    sp.add_argument("--config", help="JSON experiment config; flags override its fields")
    sp.add_argument("--n", type=int)
    sp.add_argument("--p", type=float)
    sp.add_argument("--q", type=float)
    if model_required:
        sp.add_argument("--beta", type=float)
        sp.add_argument("--alpha", type=float)
    sp.add_argument("--a", type=float, help="override the q/p ratio used for lambda")
    sp.add_argument("--chains", type=int)
    sp.add_argument("--sweeps", type=int)
    sp.add_argument("--burnin", type=int)
    sp.add_argument("--thin", type=int)
    sp.add_argument("--seed", type=int, help="base chain seed; chain i uses seed + i")
    sp.add_argument("--graph-seed", type=int)
    sp.add_argument("--graph", help="load the graph from FILE instead of generating it")
    sp.add_argument("--undirected", action="store_true")
    sp.add_argument("--init", choices=CHAIN_INITS)
    sp.add_argument("--rule", choices=RULES)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="blockspin",
                                 description="Two-block Ising model on a random directed graph")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("graph", help="generate a random block graph")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--q", type=float, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--undirected", action="store_true")
    sp.add_argument("--out", help="output file (default stdout)")
    sp.set_defaults(func=cmd_graph)

    sp = sub.add_parser("sample", help="run Glauber chains and summarize against the phase prediction")
    _add_experiment_args(sp, model_required=True)
    sp.add_argument("--out-dir", dest="out_dir", help="directory for config, graph, traces, summary")
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("sweep", help="phase map over a (beta, alpha a) grid")
    _add_experiment_args(sp, model_required=False)
    sp.add_argument("--betas", required=True, help="comma-separated beta values")
    sp.add_argument("--alpha-as", dest="alpha_as", required=True,
                    help="comma-separated alpha a values")
    sp.add_argument("--out", help="CSV file (default stdout)")
    sp.set_defaults(func=cmd_sweep, beta=None, alpha=None)

    sp = sub.add_parser("exact", help="exact enumeration for a small graph")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--beta", type=float, required=True)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--a", type=float)
    sp.add_argument("--gamma-c", dest="gamma_c", type=float, default=3.0,
                    help="constant c in gamma = c/sqrt(pn), kappa = c/sqrt(qn)")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_exact)

    sp = sub.add_parser("phase", help="mean-field phase and limit points")
    sp.add_argument("--beta", type=float, required=True)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--a", type=float, help="ratio q/p (or give --p and --q)")
    sp.add_argument("--p", type=float)
    sp.add_argument("--q", type=float)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_phase)

    sp = sub.add_parser("rate", help="rate function on a K x K grid of half-magnetizations")
    sp.add_argument("--beta", type=float, required=True)
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument("--grid", type=int, default=101)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_rate)

    sp = sub.add_parser("free-energy", help="variational free energy and finite-n comparison")
    sp.add_argument("--beta", type=float, required=True)
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument("--n", type=int, nargs="*", help="finite sizes for (1/n) log Z_complete")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_free_energy)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        args.func(args)
    except ResourceLimitError as exc:
        print(f"blockspin: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ConfigError, ValueError) as exc:
        print(f"blockspin: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"blockspin: io error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

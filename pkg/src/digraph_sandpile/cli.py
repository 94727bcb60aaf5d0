"""Command line interface: ``digraph-sandpile <command> [flags]``.

Exit codes: 0 success, 1 usage error, 2 internal consistency failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .cohen_lenstra import constants_table

# the sampling commands pull in numba; importing them lazily keeps
# ``constants`` fast
EVENTS = ("coeulerian", "cyclic", "eulerian", "infinite", "not_strongly_connected")
SUITE_NAMES = ("groups", "matrix_tree", "quotients", "smith", "structural")

EXIT_OK, EXIT_USAGE, EXIT_CONSISTENCY = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for consistency failures
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_sampling(p: argparse.ArgumentParser, trials: bool = True) -> None:
    p.add_argument("--n", type=int, help="number of vertices")
    if trials:
        p.add_argument("--trials", type=int, help="number of sampled digraphs")
        p.add_argument("--workers", type=int, help="worker processes (does not affect output)")
        p.add_argument("--depth", type=int, help="p-exponent tracking depth of the fast path (default 6)")
        p.add_argument("--config", help="JSON file with config keys; flags given explicitly override it")
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--model", help="bernoulli, uniform or a JSON model file (default bernoulli)")
    p.add_argument("--q", type=float, help="edge probability of the bernoulli model (default 0.5)")
    p.add_argument("--k", type=int, help="largest multiplicity of the uniform model (default 2)")
    p.add_argument("--seed", type=int, help="master seed (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="digraph-sandpile", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("constants", help="Cohen-Lenstra constants as JSON")
    c.add_argument("--tol", type=float, default=1e-6)
    c.add_argument("--primes", type=_int_list, default=(2, 3, 5), help="primes for the Q_p table")
    c.add_argument("--out")

    s = sub.add_parser("sample", help="one random digraph and its sandpile profile")
    _add_sampling(s, trials=False)
    s.add_argument("--out")

    d = sub.add_parser("dist", help="distribution of the P-part of the sandpile group")
    _add_sampling(d)
    d.add_argument("--primes", type=_int_list, help="comma-separated primes, e.g. 2,3")

    m = sub.add_parser("moment", help="mean of #Sur(S tensor Z/a, G)")
    _add_sampling(m)
    m.add_argument("--modulus", type=int, help="a; the exponent of G must divide it")
    m.add_argument("--group", help="target G as cyclic orders, e.g. 2 or 2,4 (default trivial)")

    r = sub.add_parser("rate", help="frequencies of structural events")
    _add_sampling(r)
    r.add_argument("--event", action="append", choices=EVENTS, help="repeatable; default all events")

    v = sub.add_parser("verify", help="run the small-instance oracle suites")
    v.add_argument("--quick", action="store_true", help="smaller instance counts")
    v.add_argument("--suite", action="append", choices=SUITE_NAMES, help="repeatable; default all")
    v.add_argument("--seed", type=int, default=0)
    return parser


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _config(args, mode: str):
    from .experiments import ExperimentConfig

    obj = {}
    if args.config:
        try:
            obj = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(obj, dict):
            raise UsageError("config file must hold a JSON object")
    flags = {
        "n": args.n,
        "trials": args.trials,
        "master_seed": args.seed,
        "depth": args.depth,
        "workers": args.workers,
        "model": args.model,
        "q": args.q,
        "k": args.k,
    }
    if mode == "dist":
        flags["primes"] = args.primes
    elif mode == "moment":
        flags["modulus"] = args.modulus
        flags["target"] = args.group
    else:
        flags["events"] = args.event
    obj.update({k: v for k, v in flags.items() if v is not None})
    for key in ("n", "trials"):
        if key not in obj:
            raise UsageError(f"--{key} is required")
    if mode == "dist" and not obj.get("primes"):
        raise UsageError("dist needs --primes")
    if mode == "moment" and obj.get("modulus") is None:
        raise UsageError("moment needs --modulus")
    if mode != "dist" and obj.get("primes"):
        raise UsageError(f"{mode} does not take primes")
    if mode != "moment" and (obj.get("modulus") is not None or obj.get("target") is not None):
        raise UsageError(f"{mode} does not take a modulus or target group")
    try:
        return ExperimentConfig.from_json(obj)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def _cmd_constants(args) -> int:
    if not args.tol > 0:
        raise UsageError("--tol must be positive")
    _emit(json.dumps(constants_table(args.tol, args.primes), sort_keys=True, indent=2) + "\n", args.out)
    return EXIT_OK


def _cmd_sample(args) -> int:
    from .experiments import model_by_name, trial_rng
    from .random_digraph import sample_digraph
    from .sandpile import profile

    if args.n is None:
        raise UsageError("--n is required")
    try:
        model = model_by_name(args.model or "bernoulli", q=0.5 if args.q is None else args.q, k=args.k or 2)
        G = sample_digraph(args.n, model, trial_rng(args.seed or 0, 0))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = {"digraph": G.to_json(), "model": model.to_json(), "seed": args.seed or 0, "profile": profile(G).to_json()}
    _emit(json.dumps(out, sort_keys=True, indent=2) + "\n", args.out)
    return EXIT_OK


def _cmd_experiment(args) -> int:
    from .experiments import dumps_report, report_to_csv, run_distribution, run_event_rate, run_moment

    runners = {"dist": run_distribution, "moment": run_moment, "rate": run_event_rate}
    cfg = _config(args, args.command)
    try:
        report = runners[args.command](cfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    text = dumps_report(report) if args.format == "json" else report_to_csv(report)
    _emit(text, args.out)
    return EXIT_OK


def _cmd_verify(args) -> int:
    from .verify import run_all

    results = run_all(quick=args.quick, seed=args.seed, names=args.suite)
    for res in results:
        print(res.line())
        for msg in res.failures:
            print(f"  {msg}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_CONSISTENCY


_COMMANDS = {
    "constants": _cmd_constants,
    "sample": _cmd_sample,
    "dist": _cmd_experiment,
    "moment": _cmd_experiment,
    "rate": _cmd_experiment,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except RuntimeError as exc:
        from .sandpile import ConsistencyError

        if not isinstance(exc, ConsistencyError):
            raise
        print(f"consistency failure: {exc}", file=sys.stderr)
        return EXIT_CONSISTENCY


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point.

Subcommands write CSV to ``--out`` (atomically) or to stdout. Values from
``--config`` fill in any flag not given on the command line. Exit status is
0 on success, 1 on a usage error and 2 when a run fails or a check does not
pass.
"""
from __future__ import annotations

import argparse
import sys
from typing import Sequence

from .harness.experiment import AGENTS, ENVS, ExperimentConfig, bayes_regret_curves
from .harness.output import curve_csv, read_config, summary_csv, write_atomic
from .harness import sweeps

EXIT_OK, EXIT_USAGE, EXIT_FAILURE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _agent_list(text: str) -> list[str]:
    names = [v for v in text.replace(" ", "").split(",") if v]
    bad = [n for n in names if n not in AGENTS]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"unknown agent(s) {bad}; choose from {AGENTS}")
    return names


# flag name -> (type, default); None defaults are resolved per subcommand
_FLAGS = {
    "agent": (_agent_list, None),
    "env": (str, None),
    "episodes": (int, None),
    "seeds": (int, None),
    "prior_draws": (int, None),
    "seed": (int, 0),
    "out": (str, None),
    "beta": (float, None),
    "sigma": (float, None),
    "epsilon": (float, 1e-3),
    "size_grid": (_int_list, None),
    "parallelism": (int, 1),
    "trials": (int, 100),
    "mc_samples": (int, 10_000),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bayes-explore",
                     description="Bayesian exploration experiments on tabular MDPs.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    commands = {
        "problem1-sweep": "Bayes and worst-case regret on the one-unknown-arm bandit",
        "deepsea-sweep": "time to learn on DeepSea over a grid of sizes",
        "check-bounds": "Monte-Carlo checks of the KL and optimism bounds",
        "run": "per-episode regret curves for a single configuration",
        "bandit-table": "beta* and the unknown arm's probability for bandit K-learning",
    }
    for name, help_text in commands.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="flat 'key = value' file; flags take precedence")
        p.add_argument("--out", help="output CSV path (default: stdout)")
        p.add_argument("--seed", type=int, help="master seed (default 0)")
        p.add_argument("--parallelism", type=int, help="worker processes (default 1)")
        if name in ("problem1-sweep", "deepsea-sweep", "run"):
            p.add_argument("--agent", type=_agent_list, help="agent name(s), comma-separated")
            p.add_argument("--seeds", type=int, help="seeds per environment draw")
            p.add_argument("--beta", type=float,
                           help="inverse temperature (soft-Q) or base beta (K-learning)")
            p.add_argument("--sigma", type=float, help="K-learning bonus scale")
        if name in ("problem1-sweep", "run"):
            p.add_argument("--episodes", type=int, help="episodes per run (default 100)")
            p.add_argument("--prior-draws", type=int, help="environments drawn from the prior")
        if name in ("problem1-sweep", "run", "bandit-table"):
            p.add_argument("--epsilon", type=float, help="gap of the known arms (default 1e-3)")
        if name != "check-bounds":
            p.add_argument("--size-grid", type=_int_list,
                           help="comma-separated problem sizes (arms or DeepSea N)")
        if name == "run":
            p.add_argument("--env", choices=ENVS, help="environment family")
        if name == "check-bounds":
            p.add_argument("--trials", type=int, help="random beliefs (default 100)")
            p.add_argument("--mc-samples", type=int, help="posterior draws per check")
            p.add_argument("--sigma", type=float,
                           help="bonus scale (default sigma^2 = H (1 + H^2 / 4))")
    return parser


def _resolve(parser: argparse.ArgumentParser, args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset flags from the config file, then from defaults."""
    if args.config:
        try:
            config = read_config(args.config)
        except (OSError, ValueError) as exc:
            parser.error(str(exc))
        for key, raw in config.items():
            if key not in _FLAGS or not hasattr(args, key):
                parser.error(f"config key {key!r} does not apply to {args.command}")
            if getattr(args, key) is None:
                try:
                    setattr(args, key, _FLAGS[key][0](raw))
                except (ValueError, argparse.ArgumentTypeError) as exc:
                    parser.error(f"config key {key!r}: {exc}")
    for key, (_, default) in _FLAGS.items():
        if hasattr(args, key) and getattr(args, key) is None and default is not None:
            setattr(args, key, default)
    if getattr(args, "env", None) is not None and args.env not in ENVS:
        parser.error(f"unknown env {args.env!r}; choose from {ENVS}")
    for key in ("episodes", "seeds", "prior_draws", "parallelism", "trials", "mc_samples"):
        value = getattr(args, key, None)
        if value is not None and value < 1:
            parser.error(f"--{key.replace('_', '-')} must be >= 1")
    return args


def _emit(args, text: str) -> None:
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)


def _problem1(args) -> int:
    rows = sweeps.problem1_sweep(
        sizes=args.size_grid or sweeps.PROBLEM1_SIZES,
        agents=args.agent or sweeps.PROBLEM1_AGENTS,
        episodes=args.episodes or 100, prior_draws=args.prior_draws or 10_000,
        seeds=args.seeds or 1, master_seed=args.seed, epsilon=args.epsilon,
        sigma=args.sigma or 1.0, beta=args.beta, parallelism=args.parallelism)
    _emit(args, summary_csv(rows))
    return EXIT_OK


def _deepsea(args) -> int:
    agents = args.agent or sweeps.DEEPSEA_AGENTS
    bad = [a for a in agents if a not in sweeps.DEEPSEA_AGENTS + ("greedy",)]
    if bad:
        raise UsageError(f"agent(s) {bad} cannot run on DeepSea")
    beta = args.beta
    rows = sweeps.deepsea_sweep(
        sizes=args.size_grid or sweeps.DEEPSEA_SIZES, agents=agents, seeds=args.seeds or 3,
        master_seed=args.seed,
        soft_q_beta=sweeps.DEEPSEA_SOFT_Q_BETA if beta is None else beta,
        k_beta=sweeps.DEEPSEA_K_BETA if beta is None else beta,
        sigma=args.sigma or 1.0, parallelism=args.parallelism)
    _emit(args, summary_csv(rows))
    return EXIT_OK


def _check_bounds(args) -> int:
    results = sweeps.check_bounds(trials=args.trials, mc_samples=args.mc_samples,
                                  master_seed=args.seed, sigma=args.sigma,
                                  parallelism=args.parallelism)
    _emit(args, summary_csv(sweeps.bound_summary(results)))
    failed = [r for r in results if not (r.theorem1 and r.optimism)]
    for r in failed:
        print(f"failed: trial {r.trial} beta={r.beta:g} (S, A, H)={r.shape} "
              f"theorem1={r.theorem1} optimism={r.optimism}", file=sys.stderr)
    return EXIT_OK if not failed else EXIT_FAILURE


def _run(args) -> int:
    agents = args.agent or ["thompson"]
    if len(agents) != 1:
        raise UsageError("run takes exactly one --agent")
    sizes = args.size_grid or [10]
    env = args.env or "problem1"
    text = None
    for n in sizes:
        config = ExperimentConfig(agent=agents[0], env=env, param_n=n, epsilon=args.epsilon,
                                  episodes=args.episodes or 100,
                                  prior_draws=args.prior_draws or 1, seeds=args.seeds or 1,
                                  master_seed=args.seed, beta=args.beta,
                                  sigma=args.sigma or 1.0, parallelism=args.parallelism)
        curves = bayes_regret_curves(config)
        part = curve_csv(curves, "run", n, args.epsilon if env == "problem1" else None)
        text = part if text is None else text + part.split("\n", 1)[1]
    _emit(args, text)
    return EXIT_OK


def _bandit_table(args) -> int:
    rows = sweeps.bandit_table(args.size_grid, epsilon=args.epsilon)
    _emit(args, summary_csv(sweeps.bandit_rows_to_summary(rows)))
    return EXIT_OK


_COMMANDS = {"problem1-sweep": _problem1, "deepsea-sweep": _deepsea,
             "check-bounds": _check_bounds, "run": _run, "bandit-table": _bandit_table}


def run_cli(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = _resolve(parser, parser.parse_args(argv))
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"bayes-explore: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, FloatingPointError, OSError) as exc:
        print(f"bayes-explore: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()

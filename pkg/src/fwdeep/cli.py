"""Command-line entry point: reproduce the quadratic, full-batch and mini-batch experiments."""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from fwdeep import dataset as ds
from fwdeep import plotting
from fwdeep.errors import InvalidInputError, NumericalError, ParseError
from fwdeep.fw_core import L1Ball, StepKind, StepSizeRule, fw_run
from fwdeep.objective import QuadraticObjective
from fwdeep.trainers import DEFAULT_SEED_INIT, DEFAULT_SEED_SHUFFLE, Method, RunHistory, TrainConfig, train

log = logging.getLogger("fwdeep")

RULE_CHOICES = [k.value for k in StepKind]

# Constants and epoch budgets for the default comparison sets.
QUADRATIC_CONSTANTS = {StepKind.FIXED: 0.1, StepKind.PROPORTIONAL: 0.1}
FULL_CONSTANTS = {StepKind.FIXED: 3e-3, StepKind.PROPORTIONAL: 3e-2}
STOCHASTIC_CONSTANTS = {StepKind.FIXED: 1e-4, StepKind.PROPORTIONAL: 1e-4}
FULL_EPOCHS = {
    "gd": 300,
    StepKind.FIXED: 2000,
    StepKind.PROPORTIONAL: 2000,
    StepKind.DECREASING: 300,
    StepKind.LINE_SEARCH: 300,
}
STOCHASTIC_EPOCHS = 100
FULL_RULES = [StepKind.FIXED, StepKind.PROPORTIONAL, StepKind.DECREASING, StepKind.LINE_SEARCH]
STOCHASTIC_RULES = [StepKind.FIXED, StepKind.PROPORTIONAL, StepKind.LINE_SEARCH]
DEFAULT_BATCH = 200


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (v > 0 and v < float("inf")):
        raise argparse.ArgumentTypeError(f"must be a positive finite number, got {text}")
    return v


def _nonnegative_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (v >= 0 and v < float("inf")):
        raise argparse.ArgumentTypeError(f"must be a non-negative finite number, got {text}")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return v


def _batch(text: str) -> int | None:
    if text == "full":
        return None
    try:
        return _positive_int(text)
    except argparse.ArgumentTypeError:
        raise argparse.ArgumentTypeError(f"must be 'full' or a positive integer, got {text!r}") from None


def _add_common_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=["all", "gd", "fw"], default="all",
                   help="run gradient descent, Frank-Wolfe, or both (default: all)")
    p.add_argument("--rule", choices=RULE_CHOICES, action="append",
                   help="Frank-Wolfe step-size rule; repeat to run several (default: the comparison set)")
    p.add_argument("--constant", type=_positive_float,
                   help="constant for the fixed and proportional rules (default: per experiment)")
    p.add_argument("--lr", type=_positive_float, default=0.1, help="gradient-descent learning rate (default: 0.1)")
    p.add_argument("--penalty", type=_nonnegative_float, default=0.1,
                   help="L1 penalty weight against the summed squared error, gradient descent only (default: 0.1)")
    p.add_argument("--radius", type=_positive_float, default=10.0, help="L1-ball radius (default: 10)")
    p.add_argument("--epochs", type=_positive_int, help="epoch budget for every run (default: per method)")
    p.add_argument("--seed-init", type=_seed, default=DEFAULT_SEED_INIT, help="parameter init seed (default: 7)")
    p.add_argument("--seed-train", type=_seed, default=ds.DEFAULT_TRAIN_SEED, help="training-set seed (default: 42)")
    p.add_argument("--seed-test", type=_seed, default=ds.DEFAULT_TEST_SEED, help="test-set seed (default: 43)")
    p.add_argument("--seed-shuffle", type=_seed, default=DEFAULT_SEED_SHUFFLE,
                   help="mini-batch shuffle seed (default: 11)")
    p.add_argument("--train-csv", help="load the training set from this CSV instead of generating it")
    p.add_argument("--test-csv", help="load the test set from this CSV instead of generating it")
    p.add_argument("--exclude-biases", action="store_true",
                   help="constrain/penalize weight matrices only; biases stay at their initial values under FW")
    p.add_argument("--no-timing", action="store_true", help="write 0 in the ms column so output is reproducible")
    p.add_argument("--jobs", type=_positive_int, default=1, help="runs to execute in parallel (default: 1)")
    p.add_argument("--out", default=".", help="output directory (default: current directory)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fwdeep", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    q = sub.add_parser("quadratic", help="Frank-Wolfe on x1^2 + x2^2 from (0.5, 0.5) with all four rules")
    q.add_argument("--rule", choices=RULE_CHOICES, action="append", help="rule to run; repeatable (default: all four)")
    q.add_argument("--constant", type=_positive_float, help="constant for fixed/prop (default: 0.1)")
    q.add_argument("--radius", type=_positive_float, default=1.0, help="L1-ball radius (default: 1)")
    q.add_argument("--iterations", type=_positive_int, default=1000, help="iterations (default: 1000)")
    q.add_argument("--out", default=".", help="output directory (default: current directory)")

    f = sub.add_parser("train-full", help="full-batch GD and Frank-Wolfe on the circle data")
    _add_common_train_flags(f)

    s = sub.add_parser("train-stochastic", help="mini-batch SGD and Frank-Wolfe on the circle data")
    _add_common_train_flags(s)
    s.add_argument("--batch", type=_batch, default=DEFAULT_BATCH,
                   help="batch size, or 'full' (default: 200; the experiments also use 500 and 100)")

    g = sub.add_parser("gen-data", help="write a circle dataset to CSV")
    g.add_argument("--n", type=_positive_int, default=ds.DEFAULT_SIZE, help="number of samples (default: 1000)")
    g.add_argument("--seed", type=_seed, default=ds.DEFAULT_TRAIN_SEED, help="generator seed (default: 42)")
    g.add_argument("--out", required=True, help="output CSV path")

    p = sub.add_parser("plot", help="plot history CSVs into one SVG")
    p.add_argument("csv", nargs="+", help="history CSV files")
    p.add_argument("--column", help="y column (default: f if present, else test_acc)")
    p.add_argument("--log", action="store_true", help="logarithmic y axis")
    p.add_argument("--title", default="", help="chart title")
    p.add_argument("--out", required=True, help="output SVG path")
    return parser


def _make_rule(kind: StepKind, constant: float | None, defaults: dict) -> StepSizeRule:
    if kind is StepKind.FIXED:
        return StepSizeRule.fixed(constant if constant is not None else defaults[kind])
    if kind is StepKind.PROPORTIONAL:
        return StepSizeRule.proportional(constant if constant is not None else defaults[kind])
    if kind is StepKind.DECREASING:
        return StepSizeRule.decreasing()
    return StepSizeRule.line_search_rule()


def _check_constant(parser: argparse.ArgumentParser, args, kinds) -> None:
    if args.constant is not None and args.constant > 1 and StepKind.FIXED in kinds:
        parser.error("argument --constant: a fixed step must be <= 1")


class _Outputs:
    """Tracks files written by one command so they can be removed if it fails."""

    def __init__(self):
        self.paths: list[str] = []

    def add(self, path: str) -> str:
        self.paths.append(path)
        return path

    def discard(self) -> None:
        for p in self.paths:
            if os.path.isfile(p):
                os.remove(p)


def run_quadratic(args, parser, outputs: _Outputs) -> None:
    kinds = [StepKind(r) for r in args.rule] if args.rule else list(StepKind)
    _check_constant(parser, args, kinds)
    os.makedirs(args.out, exist_ok=True)
    ball = L1Ball(args.radius)
    objective = QuadraticObjective()
    csv_paths = []
    for kind in kinds:
        rule = _make_rule(kind, args.constant, QUADRATIC_CONSTANTS)
        traj = fw_run(objective, ball, [0.5, 0.5], rule, args.iterations)
        path = outputs.add(os.path.join(args.out, f"{kind.value}.csv"))
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("iter", "f", "gamma", "gap", "x1", "x2"))
            for st in traj:
                gamma = "" if st.gamma is None else repr(st.gamma)
                w.writerow((st.t, repr(st.value), gamma, repr(st.gap), repr(float(st.x[0])), repr(float(st.x[1]))))
        csv_paths.append(path)
        print(f"{kind.value}: f({args.iterations}) = {traj[-1].value:.3e} -> {path}")
    svg = outputs.add(os.path.join(args.out, "quadratic.svg"))
    plotting.plot(csv_paths, svg, column="f", log_y=True, title="x1^2 + x2^2 from (0.5, 0.5)")
    print(f"plot -> {svg}")


def _train_configs(args, parser, stochastic: bool) -> list[TrainConfig]:
    batch = args.batch if stochastic else None
    constants = STOCHASTIC_CONSTANTS if stochastic else FULL_CONSTANTS
    configs = []
    common = dict(
        radius=args.radius,
        batch_size=batch,
        seed_init=args.seed_init,
        seed_train=args.seed_train,
        seed_test=args.seed_test,
        seed_shuffle=args.seed_shuffle,
        include_biases=not args.exclude_biases,
    )
    if args.method in ("all", "gd"):
        epochs = args.epochs or (STOCHASTIC_EPOCHS if stochastic else FULL_EPOCHS["gd"])
        configs.append(TrainConfig(Method.GD, epochs, learning_rate=args.lr, penalty=args.penalty, **common))
    if args.method in ("all", "fw"):
        kinds = [StepKind(r) for r in args.rule] if args.rule else (STOCHASTIC_RULES if stochastic else FULL_RULES)
        _check_constant(parser, args, kinds)
        for kind in dict.fromkeys(kinds):
            epochs = args.epochs or (STOCHASTIC_EPOCHS if stochastic else FULL_EPOCHS[kind])
            configs.append(TrainConfig(Method.FW, epochs, _make_rule(kind, args.constant, constants), **common))
    return configs


def run_train(args, parser, outputs: _Outputs, stochastic: bool) -> list[RunHistory]:
    configs = _train_configs(args, parser, stochastic)
    train_set = ds.load_csv(args.train_csv) if args.train_csv else None
    test_set = ds.load_csv(args.test_csv) if args.test_csv else None
    os.makedirs(args.out, exist_ok=True)

    if args.jobs > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            histories = list(pool.map(train, configs, [train_set] * len(configs), [test_set] * len(configs)))
    else:
        histories = []
        for cfg in configs:
            log.info("running %s for %d epochs", cfg.rule.kind.value if cfg.rule else "gd", cfg.epochs)
            histories.append(train(cfg, train_set, test_set))

    csv_paths = []
    for h in histories:
        path = outputs.add(os.path.join(args.out, f"{h.label}.csv"))
        h.to_csv(path, timing=not args.no_timing)
        csv_paths.append(path)
        print(
            f"{h.label}: final test_acc {h.final.test_accuracy:.3f}, best {h.best_test_accuracy():.3f}, "
            f"l1 {h.final.l1_norm:.3f} -> {path}"
        )
    svg = outputs.add(os.path.join(args.out, "accuracy.svg"))
    title = f"mini-batch {args.batch}" if stochastic else "full batch"
    plotting.plot(csv_paths, svg, column="test_acc", title=f"test accuracy, {title}")
    print(f"plot -> {svg}")
    return histories


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    outputs = _Outputs()
    try:
        if args.command == "quadratic":
            run_quadratic(args, parser, outputs)
        elif args.command == "train-full":
            run_train(args, parser, outputs, stochastic=False)
        elif args.command == "train-stochastic":
            run_train(args, parser, outputs, stochastic=True)
        elif args.command == "gen-data":
            data = ds.generate(args.n, args.seed)
            ds.save_csv(data, outputs.add(args.out))
            print(f"{len(data)} samples -> {args.out}")
        elif args.command == "plot":
            plotting.plot(args.csv, args.out, column=args.column, log_y=args.log, title=args.title)
            print(f"plot -> {args.out}")
    except (InvalidInputError, NumericalError, ParseError, OSError, ValueError) as exc:
        outputs.discard()
        print(f"fwdeep: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

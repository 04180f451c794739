"""
Command line entry point.

    python -m openfer.cli <command> [options] [--section.key value ...]

Commands: split, synth, train, eval, protocol, plot, gradcheck.  Any config
field can be overridden, e.g. ``--optim.epochs 2 --protocol.task 1``.

Exit codes: 0 success, 1 validation error, 2 runtime / divergence error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from openfer.errors import ConfigError, OpenFERError

_log = logging.getLogger("openfer.cli")


def _overrides(extra: list[str]) -> list[tuple[str, str]]:
    """``["--optim.lr", "0.1", "--a.b=c"]`` → ``[("optim.lr", "0.1"), ("a.b", "c")]``."""
    pairs, i = [], 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or "." not in tok:
            raise ConfigError(f"unrecognised argument {tok!r} (overrides look like --section.key value)")
        key = tok[2:]
        if "=" in key:
            key, value = key.split("=", 1)
            i += 1
        elif i + 1 < len(extra):
            value = extra[i + 1]
            i += 2
        else:
            raise ConfigError(f"override {tok} has no value")
        pairs.append((key, value))
    return pairs


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="openfer", description="Open-set video FER with prompts")
    parser.add_argument("--config", type=Path, default=None, help="config.yaml to load")
    parser.add_argument("--log-level", default="INFO")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="write split records for the configured task")
    p.add_argument("--out", type=Path, default=None)
    p = sub.add_parser("synth", help="write the synthetic dataset as PNG frames + manifest")
    p.add_argument("--out", type=Path, default=None)
    sub.add_parser("train", help="train prompts on the first division of the task")
    p = sub.add_parser("eval", help="evaluate a checkpoint on the first division's test set")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--out", type=Path, default=None)
    sub.add_parser("protocol", help="run every division of the task and aggregate")
    p = sub.add_parser("plot", help="known/unknown score histograms from a scores file")
    p.add_argument("--scores", type=Path, required=True)
    p.add_argument("--out", type=Path, default=None)
    p = sub.add_parser("gradcheck", help="finite-difference gradient suites")
    p.add_argument("--directions", type=int, default=20)
    return parser


def _split(config, args) -> int:
    from openfer.ingest import load_source, save_split
    from openfer.runners.protocol import cell_splits, task_spec
    from openfer.utils.paths import run_dir

    dataset = load_source(config)
    spec = task_spec(config, len(dataset.class_names))
    out = args.out or run_dir(config, "splits")
    out.mkdir(parents=True, exist_ok=True)
    for K, U in spec.cells:
        for r, split in enumerate(cell_splits(config, spec, dataset, K, U)):
            fp = save_split(split, out / f"O{K}-{U}_r{r}.json")
            print(f"✓ split O({K}:{U}) openness={split.openness:.2f} →", fp)
    return 0


def _synth(config, args) -> int:
    from openfer.ingest import synthesize_dataset, synthetic_spec, write_dataset
    from openfer.utils.paths import run_dir

    dataset = synthesize_dataset(synthetic_spec(config.data.synthetic).validate())
    manifest = write_dataset(dataset, args.out or run_dir(config, "synthetic"))
    print(f"✓ {len(dataset)} synthetic videos →", manifest)
    return 0


def _train(config, args) -> int:
    from openfer.learning import train

    train(config)
    return 0


def _eval(config, args) -> int:
    from openfer.evaluation import SCORES_FILE, evaluate_run, plot_score_distributions
    from openfer.learning import load_checkpoint
    from openfer.runners.protocol import default_split
    from openfer.utils.paths import run_dir

    _, test, _ = default_split(config)
    out = args.out or run_dir(config, "eval")
    report = evaluate_run(config, load_checkpoint(args.checkpoint), test, out_dir=out)
    plot_score_distributions(out / SCORES_FILE)
    print(f"✓ AUROC {report.auroc:.4f}  OSCR {report.oscr:.4f}")
    return 0


def _protocol(config, args) -> int:
    from openfer.runners import run_protocol

    run_protocol(config)
    return 0


def _plot(config, args) -> int:
    from openfer.evaluation import plot_score_distributions

    print("✓ plot →", plot_score_distributions(args.scores, args.out))
    return 0


def _gradcheck(config, args) -> int:
    from openfer.learning import run_gradcheck

    results = run_gradcheck(config, directions=args.directions)
    for r in results:
        print(f"{'✓' if r.passed else '✗'} {r.name:24s} max rel err {r.max_error:.2e} (tol {r.tolerance:.0e})")
    return 0 if all(r.passed for r in results) else 2


COMMANDS = {
    "split": _split, "synth": _synth, "train": _train, "eval": _eval,
    "protocol": _protocol, "plot": _plot, "gradcheck": _gradcheck,
}


def main(argv: list[str] | None = None) -> int:
    args, extra = build_parser().parse_known_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.INFO),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        from openfer.utils.paths import load_config

        config = load_config(args.config, _overrides(extra)).validate()
        return COMMANDS[args.command](config, args)
    except OpenFERError as exc:
        _log.error("%s", exc)
        return 1 if isinstance(exc, ValueError) else 2


if __name__ == "__main__":
    sys.exit(main())

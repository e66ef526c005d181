"""Batch command-line interface wiring datasets, training, inference,
evaluation, and the experiment protocols together.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
Every run prints a reproducibility line with the package version, the
resolved seed, and a digest of the resolved options. The LABELFORGE_SEED
environment variable supplies the default seed; any --seed flag overrides.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

from . import __version__
from .dataio import (
    load_model,
    model_file_from_fit,
    read_dataset,
    read_predictions,
    save_model,
    write_dataset,
    write_predictions,
    write_results_table,
)
from .errors import DataError, LabelForgeError, NumericalError
from .experiments import (
    GridSpec,
    SplitSpec,
    SyntheticSpec,
    build_mode_priors,
    generate_synthetic,
    grid_search,
    low_data_sweep,
    prior_quality_study,
    split,
    stability_sweep,
)
from .infer import majority_vote_predictions, predict
from .metrics import format_percent, report_lines, score
from .priors import build_user_priors
from .train import TrainConfig, fit

import numpy as np

MODE_CHOICES = ("mle", "map-mv", "map-emp", "map-rand", "map-user")


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError:
        raise DataError(f"expected comma-separated numbers, got {text!r}") from None


def _parse_ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip() != ""]
    except ValueError:
        raise DataError(f"expected comma-separated integers, got {text!r}") from None


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("LABELFORGE_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise DataError(f"LABELFORGE_SEED must be an integer, got {env!r}") from None


_PATH_ARGS = ("func", "data", "out", "model", "pred", "truth", "grid")


def _announce(args, seed: int) -> str:
    """Print the reproducibility line; the digest covers the resolved
    configuration (paths excluded, so renaming files does not change it)."""
    options = sorted(
        (key, value) for key, value in vars(args).items() if key not in _PATH_ARGS
    )
    blob = ";".join(f"{key}={value}" for key, value in options) + f";resolved_seed={seed}"
    digest = hashlib.sha256(blob.encode()).hexdigest()[:12]
    print(f"# labelforge {__version__} command={args.command} seed={seed} config={digest}")
    return digest


def _train_config(args, seed: int) -> TrainConfig:
    return TrainConfig(
        learning_rate=args.lr,
        max_epochs=args.epochs,
        batch_size=args.batch,
        patience=args.patience,
        alpha_init=args.alpha_init,
        seed=seed,
        learn_beta=getattr(args, "learn_beta", False),
    )


def _holdout(dataset, val_frac: float, seed: int):
    """Split off a validation share of a dataset for training-time early stopping."""
    if not (0.0 <= val_frac < 1.0):
        raise DataError(f"--val-frac must lie in [0, 1), got {val_frac}")
    n_val = int(np.floor(dataset.n * val_frac + 0.5))
    if n_val == 0:
        return dataset, None
    if n_val >= dataset.n:
        raise DataError("validation fraction leaves no training rows")
    perm = np.random.default_rng(seed).permutation(dataset.n)
    return dataset.subset(perm[n_val:]), dataset.subset(perm[:n_val])


def _cmd_train(args) -> int:
    seed = _resolve_seed(args)
    digest = _announce(args, seed)
    dataset = read_dataset(args.data, args.truth_col)
    train, val = _holdout(dataset, args.val_frac, seed)
    if args.mode == "map-user":
        if args.prior_u is None or args.prior_v is None:
            print("error: --mode map-user requires --prior-u and --prior-v", file=sys.stderr)
            return 1
        prior = build_user_priors(
            _parse_floats(args.prior_u), _parse_floats(args.prior_v), args.p,
            force_abstain=args.force_abstain,
        )
    else:
        prior = build_mode_priors(
            args.mode, train.votes, train.truth, args.strength, args.p,
            args.force_abstain, seed,
        )
    config = _train_config(args, seed)
    result = fit(train.votes, None if val is None else val.votes, prior, config)
    save_model(args.out, model_file_from_fit(result.params, prior, digest))
    print(f"trained mode={args.mode} epochs={result.stopped_epoch} best_epoch={result.best_epoch}")
    if result.train_loss_history:
        print(f"final_train_loss={result.train_loss_history[-1]!r}")
    if result.val_loss_history:
        print(f"best_val_loss={min(result.val_loss_history)!r}")
    print(f"model written to {args.out}")
    return 0


def _cmd_predict(args) -> int:
    seed = _resolve_seed(args)
    _announce(args, seed)
    model = load_model(args.model)
    dataset = read_dataset(args.data, args.truth_col)
    if dataset.m != model.m:
        raise DataError(f"model expects {model.m} LF columns, data has {dataset.m}")
    preds = predict(dataset.votes, model.params(), model.label_prior())
    write_predictions(args.out, preds)
    print(f"predictions written to {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    seed = _resolve_seed(args)
    _announce(args, seed)
    sources = [args.pred is not None, args.model is not None, args.mode == "mv"]
    if sum(sources) != 1:
        print(
            "error: supply exactly one of --pred, --model (with --data), or --mode mv",
            file=sys.stderr,
        )
        return 1

    dataset = None
    if args.data is not None:
        dataset = read_dataset(args.data, args.truth_col)
    if args.pred is not None:
        preds = read_predictions(args.pred)
        row_tag = "pred"
    elif args.model is not None:
        if dataset is None:
            print("error: --model requires --data", file=sys.stderr)
            return 1
        model = load_model(args.model)
        if dataset.m != model.m:
            raise DataError(f"model expects {model.m} LF columns, data has {dataset.m}")
        preds = predict(dataset.votes, model.params(), model.label_prior())
        row_tag = "model"
    else:
        if dataset is None:
            print("error: --mode mv requires --data", file=sys.stderr)
            return 1
        preds = majority_vote_predictions(dataset.votes)
        row_tag = "mv"

    if args.truth is not None:
        truth_ds = read_dataset(args.truth, args.truth_col)
        if truth_ds.truth is None:
            raise DataError(f"{args.truth}: no {args.truth_col!r} column to evaluate against")
        truth = truth_ds.truth
    elif dataset is not None and dataset.truth is not None:
        truth = dataset.truth
    else:
        print("error: no ground truth (--truth file or truth column in --data)", file=sys.stderr)
        return 1

    report = score(preds, truth)
    for line in report_lines(report):
        print(line)
    if args.out:
        rows = [
            {
                "experiment": "evaluate",
                "mode": row_tag,
                "size": len(preds),
                "replicate": "0",
                "metric": name,
                "value": value,
            }
            for name, value in report.as_dict().items()
        ]
        write_results_table(args.out, rows)
        print(f"report written to {args.out}")
    return 0


def _cmd_gridsearch(args) -> int:
    seed = _resolve_seed(args)
    _announce(args, seed)
    dataset = read_dataset(args.data, args.truth_col)
    if dataset.truth is None:
        raise DataError("grid search needs a truth column for validation scoring")
    train, val, _ = split(dataset, SplitSpec(seed=seed))
    grid = GridSpec()
    if args.grid is not None:
        raw = json.loads(open(args.grid).read())
        known = {"strengths", "learning_rates", "alpha_inits", "ps", "force_abstain"}
        unknown = set(raw) - known
        if unknown:
            raise DataError(f"unknown grid keys {sorted(unknown)}")
        grid = GridSpec(**{key: tuple(value) for key, value in raw.items()})
    base = TrainConfig(
        max_epochs=args.epochs, batch_size=args.batch, patience=args.patience, seed=seed
    )
    result = grid_search(train, val, grid, args.mode, base)
    print(f"best cell #{result.best.index} wins={result.best.wins}: {result.best.settings}")
    if args.out:
        rows = []
        for cell in result.cells:
            if cell.report is None:
                continue
            for name, value in cell.report.as_dict().items():
                rows.append(
                    {
                        "experiment": "gridsearch",
                        "mode": args.mode,
                        "size": "",
                        "replicate": str(cell.index),
                        "metric": name,
                        "value": value,
                    }
                )
        write_results_table(args.out, rows)
        print(f"per-cell metrics written to {args.out}")
    return 0


def _cmd_lowdata(args) -> int:
    seed = _resolve_seed(args)
    _announce(args, seed)
    dataset = read_dataset(args.data, args.truth_col)
    rows = low_data_sweep(
        dataset,
        _parse_ints(args.sizes),
        args.replicates,
        modes=tuple(args.modes.split(",")),
        split_spec=SplitSpec(seed=seed),
        config=_train_config(args, seed),
        strength=args.strength,
        p=args.p,
        force_abstain=args.force_abstain,
    )
    for row in rows:
        if row["replicate"] in ("mean", "std") and row["metric"] == "f1":
            print(
                f"size={row['size']} mode={row['mode']} f1_{row['replicate']}="
                f"{format_percent(row['value'])}"
            )
    if args.out:
        write_results_table(args.out, rows)
        print(f"results written to {args.out}")
    return 0


def _cmd_stability(args) -> int:
    seed = _resolve_seed(args)
    _announce(args, seed)
    dataset = read_dataset(args.data, args.truth_col)
    train, val, test = split(dataset, SplitSpec(seed=seed))
    rows = stability_sweep(
        train,
        val,
        test,
        _parse_ints(args.epoch_grid),
        modes=tuple(args.modes.split(",")),
        config=_train_config(args, seed),
        strength=args.strength,
        p=args.p,
        force_abstain=args.force_abstain,
    )
    for row in rows:
        if row["metric"] == "f1":
            print(f"epochs={row['size']} mode={row['mode']} f1={format_percent(row['value'])}")
    if args.out:
        write_results_table(args.out, rows)
        print(f"results written to {args.out}")
    return 0


def _cmd_synth(args) -> int:
    seed = _resolve_seed(args)
    _announce(args, seed)
    accuracy = _parse_floats(args.alpha)
    coverage = _parse_floats(args.beta)
    spec = SyntheticSpec(
        m=args.m,
        n=args.n,
        accuracy=tuple(accuracy) if len(accuracy) > 1 else accuracy[0],
        coverage=tuple(coverage) if len(coverage) > 1 else coverage[0],
        class_balance=args.balance,
        seed=seed,
    )
    dataset = generate_synthetic(spec)
    write_dataset(args.out, dataset)
    print(f"synthetic dataset ({dataset.n} rows, {dataset.m} LFs) written to {args.out}")
    return 0


def _cmd_priors_study(args) -> int:
    seed = _resolve_seed(args)
    _announce(args, seed)
    dataset = read_dataset(args.data, args.truth_col)
    study = prior_quality_study(
        dataset,
        strength=args.strength,
        p=args.p,
        force_abstain=args.force_abstain,
        split_spec=SplitSpec(seed=seed),
        config=_train_config(args, seed),
    )
    rows = []
    for mode, entry in study.items():
        prior_text = "-" if entry["prior_l2"] is None else f"{entry['prior_l2']:.3f}"
        print(f"{mode}: prior_l2={prior_text} alpha_l2={entry['alpha_l2']:.3f}")
        for metric in ("prior_l2", "alpha_l2"):
            rows.append(
                {
                    "experiment": "priors_study",
                    "mode": mode,
                    "size": "",
                    "replicate": "0",
                    "metric": metric,
                    "value": entry[metric],
                }
            )
    if args.out:
        write_results_table(args.out, rows)
        print(f"results written to {args.out}")
    return 0


def _add_train_flags(sub, with_init: bool = True) -> None:
    sub.add_argument("--lr", type=float, default=0.01)
    sub.add_argument("--epochs", type=int, default=100)
    sub.add_argument("--batch", type=int, default=None)
    sub.add_argument("--patience", type=int, default=5)
    if with_init:
        sub.add_argument("--alpha-init", type=float, default=1.0)


def _add_prior_flags(sub) -> None:
    sub.add_argument("--strength", type=float, default=10.0)
    sub.add_argument("--p", type=float, default=0.5)
    sub.add_argument("--force-abstain", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="labelforge",
        description="Denoise labeling-function vote matrices with a regularized generative model.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="fit a model and write a model file")
    train.add_argument("--data", required=True)
    train.add_argument("--truth-col", default="y")
    train.add_argument("--val-frac", type=float, default=0.1)
    train.add_argument("--mode", choices=MODE_CHOICES, default="map-mv")
    train.add_argument("--prior-u", default=None, help="comma list for map-user")
    train.add_argument("--prior-v", default=None, help="comma list for map-user")
    train.add_argument("--learn-beta", action="store_true")
    train.add_argument("--seed", type=int, default=None)
    train.add_argument("--out", required=True)
    _add_prior_flags(train)
    _add_train_flags(train)
    train.set_defaults(func=_cmd_train)

    pred = sub.add_parser("predict", help="label a dataset with a saved model")
    pred.add_argument("--model", required=True)
    pred.add_argument("--data", required=True)
    pred.add_argument("--truth-col", default="y")
    pred.add_argument("--seed", type=int, default=None)
    pred.add_argument("--out", required=True)
    pred.set_defaults(func=_cmd_predict)

    ev = sub.add_parser("evaluate", help="score predictions against ground truth")
    ev.add_argument("--pred", default=None)
    ev.add_argument("--model", default=None)
    ev.add_argument("--data", default=None)
    ev.add_argument("--mode", choices=("mv",), default=None)
    ev.add_argument("--truth", default=None)
    ev.add_argument("--truth-col", default="y")
    ev.add_argument("--seed", type=int, default=None)
    ev.add_argument("--out", default=None)
    ev.set_defaults(func=_cmd_evaluate)

    gs = sub.add_parser("gridsearch", help="hyperparameter grid search on a split")
    gs.add_argument("--data", required=True)
    gs.add_argument("--truth-col", default="y")
    gs.add_argument("--grid", default=None, help="JSON file of candidate value lists")
    gs.add_argument("--mode", choices=("mle", "map-mv", "map-emp", "map-rand"), default="map-mv")
    gs.add_argument("--seed", type=int, default=None)
    gs.add_argument("--out", default=None)
    _add_train_flags(gs, with_init=False)
    gs.set_defaults(func=_cmd_gridsearch)

    ld = sub.add_parser("lowdata", help="training-set-size sweep")
    ld.add_argument("--data", required=True)
    ld.add_argument("--truth-col", default="y")
    ld.add_argument("--sizes", required=True, help="comma list of training sizes")
    ld.add_argument("--replicates", type=int, default=5)
    ld.add_argument("--modes", default="map-mv,mle")
    ld.add_argument("--seed", type=int, default=None)
    ld.add_argument("--out", default=None)
    _add_prior_flags(ld)
    _add_train_flags(ld)
    ld.set_defaults(func=_cmd_lowdata)

    st = sub.add_parser("stability", help="test metrics per fixed epoch budget")
    st.add_argument("--data", required=True)
    st.add_argument("--truth-col", default="y")
    st.add_argument("--epoch-grid", required=True, help="comma list of epoch budgets")
    st.add_argument("--modes", default="map-mv,mle")
    st.add_argument("--seed", type=int, default=None)
    st.add_argument("--out", default=None)
    _add_prior_flags(st)
    _add_train_flags(st)
    st.set_defaults(func=_cmd_stability)

    sy = sub.add_parser("synth", help="sample a synthetic dataset from the model")
    sy.add_argument("--m", type=int, required=True)
    sy.add_argument("--n", type=int, required=True)
    sy.add_argument("--alpha", required=True, help="accuracy value or comma list")
    sy.add_argument("--beta", required=True, help="coverage value or comma list")
    sy.add_argument("--balance", type=float, default=0.5)
    sy.add_argument("--seed", type=int, default=None)
    sy.add_argument("--out", required=True)
    sy.set_defaults(func=_cmd_synth)

    ps = sub.add_parser("priors-study", help="prior and accuracy distances per mode")
    ps.add_argument("--data", required=True)
    ps.add_argument("--truth-col", default="y")
    ps.add_argument("--seed", type=int, default=None)
    ps.add_argument("--out", default=None)
    _add_prior_flags(ps)
    _add_train_flags(ps)
    ps.set_defaults(func=_cmd_priors_study)

    return parser


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help, 2 for usage errors; usage maps to 1
        return 0 if exc.code == 0 else 1
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (DataError, LabelForgeError, OSError, json.JSONDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()

"""Command-line pipeline with file-based stage handoffs.

Each subcommand wraps one pipeline stage and writes a ``manifest.json``
recording input/output hashes, configuration, and seeds, so identical
invocations are byte-reproducible. Exit codes: 0 success, 2 validation
failure or bad usage, 1 fatal error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from datetime import datetime, timezone

import numpy as np

from . import __version__, manifest
from .bayes import bayes_bounds, one_nn_error, one_nn_error_loo
from .decompose import assign_factors, loadings, pca, scree_data, varimax
from .errors import ConfigError, LinkCdrError
from .features import FeatureConfig, apply_scaler, compute_feature_matrix, fit_scaler
from .ingest import (
    EventColumns,
    ObservationWindow,
    parse_events,
    parse_subscribers,
    validate_dataset,
)
from .io_utils import (
    RunManifest,
    read_features_csv,
    read_pairs_csv,
    read_predictions_csv,
    write_features_csv,
    write_json,
    write_pairs_csv,
    write_predictions_csv,
)
from .learn import (
    C_GRID,
    K_GRID,
    LabeledDataset,
    age_restricted_experiment,
    balanced_sample,
    evaluate,
    seed_ensemble,
    select_features,
    train_linear_svm,
    train_logreg,
)
from .learn.pipeline import TrainConfig
from .pairgraph import (
    PairKey,
    apply_regularity_filter,
    build_links,
    is_opposite_gender_peer_code,
    label_pairs,
    mutual_top_rank_pairs,
)
from .presets import PRESETS, load_generator_config
from .synthgen import generate, verify_planted, write_dataset

AGE_TASK_CUTOFF = 35


def _epoch(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        return int(datetime.fromisoformat(text).replace(tzinfo=timezone.utc).timestamp())


def _window_from_args(args: argparse.Namespace) -> ObservationWindow:
    if args.window_start is None and args.window_end is None:
        return ObservationWindow.default()
    if args.window_start is None or args.window_end is None:
        raise ConfigError("--window-start and --window-end must be given together")
    return ObservationWindow(_epoch(args.window_start), _epoch(args.window_end))


def _ensure_out(args: argparse.Namespace) -> str:
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _read_events_file(path: str, window: ObservationWindow):
    with open(path, "rb") as handle:
        return parse_events(handle, window)


def _read_subscribers_file(path: str):
    with open(path, "rb") as handle:
        return parse_subscribers(handle)


def _write_diagnostics(path: str, diagnostics) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as out:
        for diag in diagnostics:
            out.write(diag.to_json_line() + "\n")


def cmd_generate(args: argparse.Namespace) -> int:
    out = _ensure_out(args)
    if args.config:
        config = load_generator_config(args.config)
    else:
        if args.n_pairs is None:
            raise ConfigError("--n-pairs is required without --config")
        builder = PRESETS.get(args.preset)
        if builder is None:
            raise ConfigError(f"unknown preset {args.preset!r}; choose from {sorted(PRESETS)}")
        window = _window_from_args(args)
        config = builder(args.n_pairs, args.seed, window)
        if args.utc_offset:
            config = replace(config, utc_offset=args.utc_offset)
    dataset = generate(config)
    paths = write_dataset(dataset, out)
    outputs = list(paths.values())
    status = 0
    if args.verify:
        report = verify_planted(dataset.columns, dataset.truth, config.window, args.min_months)
        verify_path = os.path.join(out, "verify.json")
        write_json(verify_path, report.to_dict())
        outputs.append(verify_path)
        if not report.ok:
            print(
                f"planted-pair recovery {report.recovered_fraction:.4f} below 0.99",
                file=sys.stderr,
            )
            status = 2
    RunManifest(
        subcommand="generate",
        config={
            "preset": args.preset if not args.config else None,
            "config_file": args.config,
            "n_pairs": config.n_pairs,
            "window": [config.window.start, config.window.end],
            "utc_offset": config.utc_offset,
        },
        seeds=[config.seed],
        outputs=outputs,
    ).write(out)
    return status


def cmd_ingest(args: argparse.Namespace) -> int:
    out = _ensure_out(args)
    window = _window_from_args(args)
    events, event_diags = _read_events_file(args.events, window)
    subscribers, sub_diags = _read_subscribers_file(args.subscribers)
    report = validate_dataset(events, subscribers, window)
    validation_path = os.path.join(out, "validation.json")
    write_json(validation_path, report.to_dict())
    outputs = [validation_path]
    diag_path = os.path.join(out, "diagnostics.jsonl")
    _write_diagnostics(diag_path, event_diags + sub_diags)
    outputs.append(diag_path)
    RunManifest(
        subcommand="ingest",
        inputs={"events": args.events, "subscribers": args.subscribers},
        config={"window": [window.start, window.end]},
        outputs=outputs,
    ).write(out)
    return 0 if report.ok else 2


def cmd_pairs(args: argparse.Namespace) -> int:
    out = _ensure_out(args)
    window = _window_from_args(args)
    events, event_diags = _read_events_file(args.events, window)
    subscribers, _ = (
        _read_subscribers_file(args.subscribers) if args.subscribers else ({}, [])
    )
    columns = EventColumns.from_events(events)
    graph = build_links(columns, window)
    filtered = apply_regularity_filter(graph, window, args.min_months)
    pairs = mutual_top_rank_pairs(filtered)
    labels = label_pairs(pairs, subscribers)

    rows = []
    for pair in pairs:
        link = filtered.links[pair]
        label = labels.get(pair)
        rows.append(
            {
                "first": pair.first,
                "second": pair.second,
                "calls_total": link.calls_total,
                "texts_total": link.texts_total,
                "duration_total": link.duration_total,
                "months_active": link.n_active_months,
                "label_code": label.code if label else "",
                "younger_age": label.younger_age if label else "",
            }
        )
    pairs_path = os.path.join(out, "pairs.csv")
    write_pairs_csv(pairs_path, rows)
    diag_path = os.path.join(out, "diagnostics.jsonl")
    _write_diagnostics(diag_path, event_diags)
    RunManifest(
        subcommand="pairs",
        inputs={
            key: value
            for key, value in (("events", args.events), ("subscribers", args.subscribers))
            if value
        },
        config={
            "window": [window.start, window.end],
            "min_months": args.min_months,
            "n_pairs": len(rows),
        },
        outputs=[pairs_path, diag_path],
    ).write(out)
    return 0


def cmd_features(args: argparse.Namespace) -> int:
    out = _ensure_out(args)
    window = _window_from_args(args)
    events, _ = _read_events_file(args.events, window)
    columns = EventColumns.from_events(events)
    pair_rows = read_pairs_csv(args.pairs)
    pairs = [PairKey(row["first"], row["second"]) for row in pair_rows]
    graph = build_links(columns, window)
    contact_graph = (
        apply_regularity_filter(graph, window, args.min_months)
        if args.common_contacts_filtered
        else graph
    )
    matrix = compute_feature_matrix(
        columns,
        pairs,
        contact_graph,
        window,
        FeatureConfig(utc_offset=args.utc_offset),
        jobs=args.jobs,
    )
    features_path = os.path.join(out, "features.csv")
    write_features_csv(features_path, pairs, matrix)
    RunManifest(
        subcommand="features",
        inputs={"events": args.events, "pairs": args.pairs},
        config={
            "window": [window.start, window.end],
            "utc_offset": args.utc_offset,
            "common_contacts_filtered": bool(args.common_contacts_filtered),
            "manifest_hash": manifest.manifest_hash(),
        },
        outputs=[features_path],
    ).write(out)
    return 0


def cmd_pca(args: argparse.Namespace) -> int:
    out = _ensure_out(args)
    _, matrix = read_features_csv(args.features)
    scaler = fit_scaler(matrix)
    standardized = apply_scaler(matrix, scaler)
    result = pca(standardized)

    scree_path = os.path.join(out, "scree.csv")
    with open(scree_path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("component,ratio,cumulative\n")
        for idx, ratio, cumulative in scree_data(result):
            handle.write(f"{idx},{ratio!r},{cumulative!r}\n")

    load = loadings(result, args.n_comp)
    rotated = varimax(load, kaiser_normalize=not args.no_kaiser)
    loadings_path = os.path.join(out, "loadings.csv")
    with open(loadings_path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("feature," + ",".join(f"factor_{j + 1}" for j in range(args.n_comp)) + "\n")
        for name, row in zip(manifest.FEATURE_NAMES, rotated.loadings):
            handle.write(name + "," + ",".join(repr(v) for v in row.tolist()) + "\n")

    assignment = assign_factors(rotated.loadings, manifest.FEATURE_NAMES, args.cutoff)
    factors_path = os.path.join(out, "factors.json")
    write_json(
        factors_path,
        {
            "n_comp": args.n_comp,
            "kaiser_normalize": not args.no_kaiser,
            "converged": rotated.converged,
            **assignment.to_dict(),
        },
    )
    scaler_path = os.path.join(out, "scaler.json")
    write_json(scaler_path, scaler.to_dict())
    RunManifest(
        subcommand="pca",
        inputs={"features": args.features},
        config={"n_comp": args.n_comp, "cutoff": args.cutoff, "kaiser": not args.no_kaiser},
        outputs=[scree_path, loadings_path, factors_path, scaler_path],
    ).write(out)
    return 0


def _task_label(row: dict, task: str) -> int | None:
    code = row["label_code"]
    if not code:
        return None
    if task == "ogp":
        return 1 if is_opposite_gender_peer_code(code) else 0
    if task == "age35":
        younger = row["younger_age"]
        if younger is None:
            return None
        return 1 if younger < AGE_TASK_CUTOFF else 0
    raise ConfigError(f"unknown task {task!r}")


def _labeled_matrix(
    features_path: str, pairs_path: str, task: str
) -> tuple[np.ndarray, np.ndarray, list[str], list[str]]:
    """Join features with pair labels; returns (x, y, group codes, row ids)."""
    pairs, matrix = read_features_csv(features_path)
    by_key = {pair: i for i, pair in enumerate(pairs)}
    x_rows, y, groups, row_ids = [], [], [], []
    for row in read_pairs_csv(pairs_path):
        key = PairKey(row["first"], row["second"])
        idx = by_key.get(key)
        if idx is None:
            continue
        label = _task_label(row, task)
        if label is None:
            continue
        x_rows.append(matrix[idx])
        y.append(label)
        groups.append(row["label_code"])
        row_ids.append(f"{key.first}|{key.second}")
    if not x_rows:
        raise ConfigError("no labeled rows: check --features/--pairs/--task")
    return np.vstack(x_rows), np.asarray(y, dtype=np.int64), groups, row_ids


def _split_pool_test(
    n: int, n_test: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    if not 0 < n_test < n:
        raise ConfigError(f"n_test {n_test} must lie in 1..{n - 1}")
    perm = np.random.default_rng(seed).permutation(n)
    return perm[n_test:], perm[:n_test]


def _standardized_split(
    x: np.ndarray,
    y: np.ndarray,
    groups: list[str],
    row_ids: list[str],
    n_test: int,
    seed: int,
):
    pool_idx, test_idx = _split_pool_test(len(y), n_test, seed)
    scaler = fit_scaler(x[pool_idx])
    z = apply_scaler(x, scaler)
    full = LabeledDataset(z, y, list(groups), list(row_ids))
    return full.subset(pool_idx), full.subset(test_idx), scaler


_SELECTOR_TRAINERS = {"lr-l1": train_logreg, "lsvm-l1": train_linear_svm}


def cmd_train(args: argparse.Namespace) -> int:
    out = _ensure_out(args)
    x, y, groups, row_ids = _labeled_matrix(args.features, args.pairs, args.task)
    pool, test, scaler = _standardized_split(x, y, groups, row_ids, args.n_test, args.seed)

    selected = None
    if args.feature_select != "none":
        trainer = _SELECTOR_TRAINERS[args.feature_select]
        sample = balanced_sample(pool, args.n_train, args.seed)
        selector = trainer(sample.x, sample.y, penalty="l1", c=args.select_c)
        selected = select_features(selector)
        if selected.size == 0:
            raise ConfigError(
                f"l1 selection at C={args.select_c} removed every feature; raise --select-c"
            )
        pool = LabeledDataset(pool.x[:, selected], pool.y, pool.groups, pool.row_ids)
        test = LabeledDataset(test.x[:, selected], test.y, test.groups, test.row_ids)

    seeds = [args.seed + i for i in range(args.seeds)]
    grid = list(K_GRID) if args.model == "knn" else list(C_GRID)
    result = seed_ensemble(
        pool,
        test.x,
        args.model,
        grid,
        seeds,
        n_train=args.n_train,
        penalty="l2",
        calibrate=args.model != "knn",
    )
    report = evaluate(result.predictions, test.y, test.groups, result.probabilities)

    lead = result.models[0]
    model_path = os.path.join(out, "model.json")
    write_json(
        model_path,
        {
            "kind": args.model,
            "task": args.task,
            "penalty": lead.penalty,
            "c": lead.c,
            "k": lead.k,
            "weights": None if lead.weights is None else lead.weights,
            "bias": lead.bias,
            "selected_features": selected,
            "calibration": lead.calibration,
            "per_seed_params": result.best_params,
            "seeds": seeds,
            "manifest_hash": manifest.manifest_hash(),
        },
    )
    scaler_path = os.path.join(out, "scaler.json")
    write_json(scaler_path, scaler.to_dict())
    predictions_path = os.path.join(out, "predictions.csv")
    write_predictions_csv(predictions_path, test.row_ids, result.predictions, result.probabilities)
    baseline = float(max(test.y.mean(), 1.0 - test.y.mean()))
    report_path = os.path.join(out, "report.json")
    write_json(
        report_path,
        {
            "task": args.task,
            "model": args.model,
            "feature_select": args.feature_select,
            "n_train": args.n_train,
            "n_test": args.n_test,
            "seeds": seeds,
            "baseline_accuracy": baseline,
            "metrics": report.to_dict(),
        },
    )
    RunManifest(
        subcommand="train",
        inputs={"features": args.features, "pairs": args.pairs},
        config={
            "task": args.task,
            "model": args.model,
            "feature_select": args.feature_select,
            "n_train": args.n_train,
            "n_test": args.n_test,
            "select_c": args.select_c,
        },
        seeds=seeds,
        outputs=[model_path, scaler_path, predictions_path, report_path],
    ).write(out)
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    out = _ensure_out(args)
    row_ids, predictions, probabilities = read_predictions_csv(args.predictions)
    labels_by_id: dict[str, tuple[int, str]] = {}
    for row in read_pairs_csv(args.pairs):
        label = _task_label(row, args.task)
        if label is not None:
            labels_by_id[f"{row['first']}|{row['second']}"] = (label, row["label_code"])
    missing = [rid for rid in row_ids if rid not in labels_by_id]
    if missing:
        raise ConfigError(f"{len(missing)} predictions have no labeled pair (e.g. {missing[0]!r})")
    y = np.asarray([labels_by_id[rid][0] for rid in row_ids], dtype=np.int64)
    groups = [labels_by_id[rid][1] for rid in row_ids]
    report = evaluate(predictions, y, groups, probabilities)
    report_path = os.path.join(out, "report.json")
    write_json(
        report_path,
        {
            "task": args.task,
            "source": os.path.basename(args.predictions),
            "baseline_accuracy": float(max(y.mean(), 1.0 - y.mean())),
            "metrics": report.to_dict(),
        },
    )
    RunManifest(
        subcommand="evaluate",
        inputs={"predictions": args.predictions, "pairs": args.pairs},
        config={"task": args.task},
        outputs=[report_path],
    ).write(out)
    return 0


def cmd_bayes_bounds(args: argparse.Namespace) -> int:
    out = _ensure_out(args)
    x, y, _, _ = _labeled_matrix(args.features, args.pairs, args.task)
    if args.loo:
        scaler = fit_scaler(x)
        z = apply_scaler(x, scaler)
        e_nn = one_nn_error_loo(z, y)
        n_train = n_test = len(y)
    else:
        pool_idx, test_idx = _split_pool_test(len(y), args.n_test, args.seed)
        if args.n_train is not None:
            if args.n_train > len(pool_idx):
                raise ConfigError(f"n_train {args.n_train} exceeds pool size {len(pool_idx)}")
            pool_idx = pool_idx[: args.n_train]
        scaler = fit_scaler(x[pool_idx])
        z_pool = apply_scaler(x[pool_idx], scaler)
        z_test = apply_scaler(x[test_idx], scaler)
        e_nn = one_nn_error(z_pool, y[pool_idx], z_test, y[test_idx])
        n_train, n_test = len(pool_idx), len(test_idx)
    bounds = bayes_bounds(e_nn)
    bounds_path = os.path.join(out, "bounds.json")
    write_json(
        bounds_path,
        {
            **bounds.to_dict(),
            "task": args.task,
            "n_train": n_train,
            "n_test": n_test,
            "seed": args.seed,
            "leave_one_out": bool(args.loo),
        },
    )
    RunManifest(
        subcommand="bayes-bounds",
        inputs={"features": args.features, "pairs": args.pairs},
        config={"task": args.task, "loo": bool(args.loo), "n_test": args.n_test},
        seeds=[args.seed],
        outputs=[bounds_path],
    ).write(out)
    return 0


def cmd_experiment(args: argparse.Namespace) -> int:
    if args.kind != "age-restricted":
        raise ConfigError(f"unknown experiment {args.kind!r}")
    out = _ensure_out(args)
    x, y, groups, row_ids = _labeled_matrix(args.features, args.pairs, "ogp")
    pool, test, _ = _standardized_split(x, y, groups, row_ids, args.n_test, args.seed)
    seeds = tuple(args.seed + i for i in range(args.seeds))
    config = TrainConfig(kind=args.model, seeds=seeds, n_train=args.n_train)

    # reference run: train on everything, evaluate on the restricted slice
    from .pairgraph import peer_bracket_of_code

    test_mask = np.asarray(
        [peer_bracket_of_code(code) == args.bracket for code in test.groups], dtype=bool
    )
    if not test_mask.any():
        raise ConfigError(f"no peer test pairs in bracket {args.bracket!r}")
    full_run = seed_ensemble(
        pool, test.x, config.kind, config.grid, seeds, n_train=args.n_train, penalty="l2"
    )
    restricted_test = test.subset(np.flatnonzero(test_mask))
    full_report = evaluate(
        full_run.predictions[test_mask],
        restricted_test.y,
        restricted_test.groups,
        None if full_run.probabilities is None else full_run.probabilities[test_mask],
    )
    restricted_report = age_restricted_experiment(pool, test, args.bracket, config)

    gap_full = full_report.tpr - full_report.tnr
    gap_restricted = restricted_report.tpr - restricted_report.tnr
    report_path = os.path.join(out, "age_report.json")
    write_json(
        report_path,
        {
            "bracket": args.bracket,
            "model": args.model,
            "seeds": list(seeds),
            "full_training": full_report.to_dict(),
            "restricted_training": restricted_report.to_dict(),
            "ogp_sgp_gap_full": gap_full,
            "ogp_sgp_gap_restricted": gap_restricted,
            "gap_direction": (
                "restricted training evens the split"
                if abs(gap_restricted) < abs(gap_full)
                else "restricted training widens the split"
            ),
        },
    )
    RunManifest(
        subcommand="experiment age-restricted",
        inputs={"features": args.features, "pairs": args.pairs},
        config={
            "bracket": args.bracket,
            "model": args.model,
            "n_train": args.n_train,
            "n_test": args.n_test,
        },
        seeds=list(seeds),
        outputs=[report_path],
    ).write(out)
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    out = _ensure_out(args)
    from .io_utils import read_json

    lines: list[str] = []
    histogram_rows: list[str] = []
    for path in args.reports:
        payload = read_json(path)
        label = os.path.splitext(os.path.basename(path))[0]
        lines.append(f"== {label} ==")
        if "metrics" in payload:
            metrics = payload["metrics"]
            lines.append(
                f"task={payload.get('task', '?')} model={payload.get('model', '?')} "
                f"accuracy={metrics['accuracy']:.4f} "
                f"baseline={payload.get('baseline_accuracy', float('nan')):.4f}"
            )
            lines.append(
                f"precision={metrics['precision']:.4f} tpr={metrics['tpr']:.4f} "
                f"tnr={metrics['tnr']:.4f}"
            )
            lines.append(f"{'relationship':14s} {'accuracy':>9s} {'share':>7s}")
            for code, group in sorted(metrics.get("per_group", {}).items()):
                lines.append(f"{code:14s} {group['accuracy']:9.3f} {group['share']:7.3f}")
            for group, bins in (metrics.get("histograms") or {}).items():
                for b, freq in enumerate(bins):
                    histogram_rows.append(
                        f"{label},{group},{b / len(bins)!r},{(b + 1) / len(bins)!r},{freq!r}"
                    )
        if "full_training" in payload:
            lines.append(
                f"bracket={payload['bracket']} "
                f"full OGP/SGP={payload['full_training']['tpr']:.3f}/"
                f"{payload['full_training']['tnr']:.3f} "
                f"restricted OGP/SGP={payload['restricted_training']['tpr']:.3f}/"
                f"{payload['restricted_training']['tnr']:.3f}"
            )
            lines.append(payload["gap_direction"])
        lines.append("")
    summary_path = os.path.join(out, "summary.txt")
    with open(summary_path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines))
    histogram_path = os.path.join(out, "histograms.csv")
    with open(histogram_path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("report,group,bin_lo,bin_hi,rel_freq\n")
        handle.write("\n".join(histogram_rows))
        if histogram_rows:
            handle.write("\n")
    RunManifest(
        subcommand="report",
        inputs={os.path.basename(p): p for p in args.reports},
        outputs=[summary_path, histogram_path],
    ).write(out)
    return 0


def _add_window_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--window-start", help="ISO date or epoch seconds (UTC)")
    parser.add_argument("--window-end", help="ISO date or epoch seconds (UTC)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="linkcdr",
        description="Link-centric CDR analytics pipeline",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic CDR dataset")
    p.add_argument("--preset", default="table3-like", choices=sorted(PRESETS))
    p.add_argument("--config", help="flat key-value config file (overrides the flags)")
    p.add_argument("--n-pairs", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--utc-offset", type=int, default=0)
    p.add_argument("--min-months", type=int, default=5)
    p.add_argument("--verify", action="store_true", help="check planted-pair recovery")
    p.add_argument("--out", required=True)
    _add_window_flags(p)
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("ingest", help="parse and validate raw CSV inputs")
    p.add_argument("--events", required=True)
    p.add_argument("--subscribers", required=True)
    p.add_argument("--out", required=True)
    _add_window_flags(p)
    p.set_defaults(handler=cmd_ingest)

    p = sub.add_parser("pairs", help="extract mutual top-rank pairs")
    p.add_argument("--events", required=True)
    p.add_argument("--subscribers")
    p.add_argument("--min-months", type=int, default=5)
    p.add_argument("--out", required=True)
    _add_window_flags(p)
    p.set_defaults(handler=cmd_pairs)

    p = sub.add_parser("features", help="compute the 175-feature matrix")
    p.add_argument("--events", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--utc-offset", type=int, default=0)
    p.add_argument("--min-months", type=int, default=5)
    p.add_argument(
        "--common-contacts-filtered",
        action="store_true",
        help="count common contacts on the regularity-filtered graph",
    )
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    _add_window_flags(p)
    p.set_defaults(handler=cmd_features)

    p = sub.add_parser("pca", help="PCA, scree, rotated loadings, factor assignment")
    p.add_argument("--features", required=True)
    p.add_argument("--n-comp", type=int, default=5)
    p.add_argument("--cutoff", type=float, default=0.4)
    p.add_argument("--no-kaiser", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_pca)

    p = sub.add_parser("train", help="train and evaluate a classifier")
    p.add_argument("--features", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--task", choices=("ogp", "age35"), required=True)
    p.add_argument("--model", choices=("logreg", "lsvm", "knn"), default="lsvm")
    p.add_argument("--feature-select", choices=("none", "lr-l1", "lsvm-l1"), default="none")
    p.add_argument(
        "--select-c",
        type=float,
        default=30.0,
        help="C of the l1-penalized selector (mean-loss scale)",
    )
    p.add_argument("--n-train", type=int, required=True)
    p.add_argument("--n-test", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seeds", type=int, default=5, help="number of ensemble seeds")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("evaluate", help="score an external predictions file")
    p.add_argument("--predictions", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--task", choices=("ogp", "age35"), required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("bayes-bounds", help="bound the Bayes error from the 1-NN error")
    p.add_argument("--features", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--task", choices=("ogp", "age35"), required=True)
    p.add_argument("--n-train", type=int)
    p.add_argument("--n-test", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--loo", action="store_true", help="leave-one-out estimate, no split")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_bayes_bounds)

    p = sub.add_parser("experiment", help="protocol experiments")
    p.add_argument("kind", choices=("age-restricted",))
    p.add_argument("--features", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--bracket", required=True, choices=("<18", "Y", "M", "L", "O", "80+"))
    p.add_argument("--model", choices=("logreg", "lsvm"), default="lsvm")
    p.add_argument("--n-train", type=int)
    p.add_argument("--n-test", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_experiment)

    p = sub.add_parser("report", help="merge report files into a readable summary")
    p.add_argument("--reports", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LinkCdrError as exc:
        print(f"fatal: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"fatal: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

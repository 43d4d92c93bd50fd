"""Command-line pipeline: prepare -> stats -> run -> evaluate -> report.

Each command validates its inputs by checksum against the run manifest,
writes its outputs atomically, and records every design-decision switch in
effect, so a fresh checkout regenerates every table and figure-data file
from the raw ratings file deterministically.  Exit codes: 0 success, 1 some
models failed to train, 2 input or contract errors.
"""

from __future__ import annotations

import argparse
import io
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from fairbook import __version__
from fairbook.config import RunConfig, config_hash, load_config
from fairbook.dataset import (
    Dataset,
    dataset_stats,
    load_dataset,
    parse_ratings_path,
    preprocess,
    write_dataset,
)
from fairbook.errors import FairbookError
from fairbook.evaluation import (
    FrequencyReport,
    MaeResult,
    RankMetrics,
    delta_gap,
    gap,
    group_significance_test,
    mae_from_scores,
    rank_metrics,
    recommendation_frequency_correlation,
    split_train_test,
    tradeoff_correlation,
)
from fairbook.manifest import Manifest, atomic_write_text, fmt_float, record_timing, sha256_file
from fairbook.profiling import (
    BESTSELLER,
    DIVERSE,
    GROUPS,
    NICHE,
    assign_groups,
    compute_item_popularity,
    group_profile_summary,
    longtail_series,
    profile_popularity_correlations,
    ratio_histogram,
    user_profile_stats,
)
from fairbook.recommenders import (
    ModelConfig,
    RecommendationList,
    fit,
    import_external_recommendations,
    recommend_top_n,
    write_recommendations,
)

logger = logging.getLogger(__name__)

SEED_ENV_VAR = "FAIRBOOK_SEED"

GROUP_SLUGS = {NICHE: "niche", DIVERSE: "diverse", BESTSELLER: "bestseller"}

# Design-decision switches recorded in every manifest.
SWITCHES = {
    "filter_order": "implicit,dedupe_keep_last,user_min5,item_min5",
    "popular_definition": "top20pct_by_reader_count_floor_ties_by_index",
    "group_boundaries": "floor20pct_ties_by_user_index",
    "split_granularity": "global_per_interaction",
    "relevance": "any_test_interaction",
    "significance_test": "welch_unpaired_two_tailed",
    "gap_profile_basis": "full_profiles",
    "tie_break": "item_index_ascending",
    "cold_user_lists": "mostpop_fallback",
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="fairbook",
        description="Audit popularity bias in book recommendation.",
    )
    parser.add_argument("command", choices=["prepare", "stats", "run", "evaluate", "report"])
    parser.add_argument("--config", required=True, help="path to the run config file")
    parser.add_argument("--jobs", type=int, default=1, help="parallel model fits for run")
    parser.add_argument("--strict", action="store_true", help="escalate data warnings to errors")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config)
        if args.strict and not config.strict:
            config = replace(config, strict=True)
        env_seed = os.environ.get(SEED_ENV_VAR)
        if env_seed is not None:
            try:
                config = config.with_seed(int(env_seed))
            except ValueError as exc:
                raise FairbookError(f"{SEED_ENV_VAR} must be an integer, got {env_seed!r}") from exc
        handler = {
            "prepare": cmd_prepare,
            "stats": cmd_stats,
            "run": lambda cfg: cmd_run(cfg, jobs=args.jobs),
            "evaluate": cmd_evaluate,
            "report": cmd_report,
        }[args.command]
        return handler(config)
    except FairbookError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _base_manifest(config: RunConfig) -> Manifest:
    manifest = Manifest.load(config.outdir)
    manifest.set("tool_version", __version__)
    manifest.set("config_hash", config_hash(config))
    manifest.set("seed", config.seed)
    manifest.set("seed_source", "env" if os.environ.get(SEED_ENV_VAR) else "config")
    manifest.set("split_ratio", config.split_ratio)
    manifest.set("top_n", config.top_n)
    for key, value in SWITCHES.items():
        manifest.set(key, value)
    return manifest


def cmd_prepare(config: RunConfig) -> int:
    started = time.perf_counter()
    parsed = parse_ratings_path(config.raw_path, strict=config.strict)
    dataset, summary = preprocess(parsed.records)
    write_dataset(dataset, config.outdir)

    lines = [f"data_lines = {parsed.data_lines}", f"malformed = {parsed.malformed}"]
    lines += summary.lines()
    atomic_write_text(Path(config.outdir) / "provenance.txt", "\n".join(lines) + "\n")

    stats = dataset_stats(dataset)
    manifest = _base_manifest(config)
    manifest.set("dataset_sha256", sha256_file(Path(config.outdir) / "dataset.csv"))
    manifest.set("n_users", dataset.n_users)
    manifest.set("n_items", dataset.n_items)
    manifest.set("n_interactions", dataset.n_interactions)
    manifest.save(config.outdir)
    record_timing(config.outdir, "prepare", time.perf_counter() - started)

    print(f"users={dataset.n_users} items={dataset.n_items} interactions={dataset.n_interactions}")
    print(
        f"interactions_per_user={stats.interactions_per_user:.2f} "
        f"interactions_per_item={stats.interactions_per_item:.2f} "
        f"sparsity={100 * stats.sparsity:.2f}%"
    )
    return 0


def _load_prepared(config: RunConfig, manifest: Manifest) -> Dataset:
    dataset = load_dataset(config.outdir)
    recorded = manifest.get("dataset_sha256")
    actual = sha256_file(Path(config.outdir) / "dataset.csv")
    if recorded and recorded != actual:
        raise FairbookError(
            f"dataset.csv checksum {actual[:12]} does not match manifest {recorded[:12]}; rerun prepare"
        )
    return dataset


def cmd_stats(config: RunConfig) -> int:
    started = time.perf_counter()
    outdir = Path(config.outdir)
    manifest = _base_manifest(config)
    dataset = _load_prepared(config, manifest)

    pop = compute_item_popularity(dataset)
    stats = user_profile_stats(dataset, pop)
    groups = assign_groups(stats)

    buf = io.StringIO()
    buf.write("item_index,reader_count,phi,is_popular\n")
    for i in range(dataset.n_items):
        buf.write(
            f"{i},{pop.reader_count[i]},{fmt_float(pop.phi[i])},{int(pop.is_popular[i])}\n"
        )
    atomic_write_text(outdir / "item_popularity.csv", buf.getvalue())

    buf = io.StringIO()
    buf.write("user_index,profile_size,n_popular,ratio_popular,avg_item_popularity,group\n")
    for u in range(dataset.n_users):
        buf.write(
            f"{u},{stats.profile_size[u]},{stats.n_popular[u]},"
            f"{fmt_float(stats.ratio_popular[u])},{fmt_float(stats.avg_item_popularity[u])},"
            f"{groups.label(u)}\n"
        )
    atomic_write_text(outdir / "user_stats.csv", buf.getvalue())

    series = longtail_series(pop)
    buf = io.StringIO()
    buf.write("rank,reader_count\n")
    for rank, count in enumerate(series, start=1):
        buf.write(f"{rank},{count}\n")
    atomic_write_text(outdir / "fig1a_longtail.csv", buf.getvalue())

    buf = io.StringIO()
    buf.write("bin_low,bin_high,user_count\n")
    for low, high, count in ratio_histogram(stats):
        buf.write(f"{fmt_float(low)},{fmt_float(high)},{count}\n")
    atomic_write_text(outdir / "fig1b_ratio_hist.csv", buf.getvalue())

    (r_npop, p_npop), (r_avg, p_avg) = profile_popularity_correlations(stats)
    buf = io.StringIO()
    buf.write("name,r,p\n")
    buf.write(f"profile_size_vs_n_popular,{fmt_float(r_npop)},{fmt_float(p_npop)}\n")
    buf.write(f"profile_size_vs_avg_item_popularity,{fmt_float(r_avg)},{fmt_float(p_avg)}\n")
    atomic_write_text(outdir / "correlations.csv", buf.getvalue())

    means = group_profile_summary(dataset, groups)
    buf = io.StringIO()
    buf.write("group,mean_profile_size\n")
    for g in GROUPS:
        buf.write(f"{g},{fmt_float(means[g])}\n")
    atomic_write_text(outdir / "group_profile_size.csv", buf.getvalue())

    manifest.set("popular_set_size", pop.n_popular)
    sizes = groups.sizes()
    for g in GROUPS:
        manifest.set(f"group_size_{GROUP_SLUGS[g]}", sizes[g])
    manifest.save(config.outdir)
    record_timing(config.outdir, "stats", time.perf_counter() - started)

    n_low = int((stats.ratio_popular <= 0.8).sum())
    print(
        f"group_sizes niche={sizes[NICHE]} diverse={sizes[DIVERSE]} bestseller={sizes[BESTSELLER]}"
    )
    print(
        f"pct_users_with_unpopular_ge20 = {100.0 * n_low / dataset.n_users:.1f}% "
        f"({n_low} of {dataset.n_users})"
    )
    print(
        f"corr profile_size~n_popular r={fmt_float(r_npop)} p={fmt_float(p_npop)}; "
        f"profile_size~avg_popularity r={fmt_float(r_avg)} p={fmt_float(p_avg)}"
    )
    return 0


def _write_split_file(path: Path, view: Dataset) -> None:
    buf = io.StringIO()
    buf.write("user_index,item_index,rating\n")
    for u, i, r in zip(view.users, view.items, view.ratings):
        buf.write(f"{u},{i},{r}\n")
    atomic_write_text(path, buf.getvalue())


def _write_index_list(path: Path, header: str, values: np.ndarray) -> None:
    buf = io.StringIO()
    buf.write(header + "\n")
    for v in values:
        buf.write(f"{v}\n")
    atomic_write_text(path, buf.getvalue())


def _fit_one(model_config: ModelConfig, train: Dataset, test: Dataset, top_n: int):
    """Fit one model and produce its lists and test-pair scores (worker-safe)."""
    model = fit(model_config, train)
    recs = recommend_top_n(model, train, n=top_n, name=model_config.name)
    preds = model.score_pairs(test.users, test.items)
    return recs, preds, model.rating_scale


def cmd_run(config: RunConfig, jobs: int = 1) -> int:
    started = time.perf_counter()
    outdir = Path(config.outdir)
    manifest = _base_manifest(config)
    dataset = _load_prepared(config, manifest)
    if not config.models:
        raise FairbookError("no [model] sections configured; nothing to run")

    split = split_train_test(dataset, config.split_ratio, config.seed)
    _write_split_file(outdir / "train.csv", split.train)
    _write_split_file(outdir / "test.csv", split.test)
    _write_index_list(outdir / "cold_users.csv", "user_index", split.cold_users)
    _write_index_list(outdir / "cold_items.csv", "item_index", split.cold_items)
    manifest.set("run_dataset_sha256", manifest.get("dataset_sha256"))
    manifest.set("train_sha256", sha256_file(outdir / "train.csv"))
    manifest.set("test_sha256", sha256_file(outdir / "test.csv"))
    manifest.set("n_train", split.train.n_interactions)
    manifest.set("n_test", split.test.n_interactions)
    manifest.set("n_cold_users", len(split.cold_users))
    manifest.set("n_cold_items", len(split.cold_items))

    resolved = [m.resolved() for m in config.models]
    failures: list[str] = []
    results: dict[str, tuple] = {}
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {
                cfg.name: pool.submit(_fit_one, cfg, split.train, split.test, config.top_n)
                for cfg in resolved
            }
            for name, future in futures.items():
                try:
                    results[name] = future.result()
                except Exception as exc:
                    logger.error("model %s failed: %s", name, exc)
                    failures.append(name)
    else:
        for cfg in resolved:
            model_start = time.perf_counter()
            try:
                results[cfg.name] = _fit_one(cfg, split.train, split.test, config.top_n)
            except Exception as exc:
                logger.error("model %s failed: %s", cfg.name, exc)
                failures.append(cfg.name)
                continue
            record_timing(config.outdir, f"fit.{cfg.name}", time.perf_counter() - model_start)

    for cfg in resolved:
        if cfg.name not in results:
            continue
        recs, preds, rating_scale = results[cfg.name]
        recs_path = outdir / f"recs_{cfg.name}.csv"
        write_recommendations(recs, recs_path)
        buf = io.StringIO()
        buf.write("user_index,item_index,score\n")
        for u, i, s in zip(split.test.users, split.test.items, preds):
            buf.write(f"{u},{i},{fmt_float(float(s))}\n")
        preds_path = outdir / f"preds_{cfg.name}.csv"
        atomic_write_text(preds_path, buf.getvalue())
        manifest.set(f"recs_{cfg.name}_sha256", sha256_file(recs_path))
        manifest.set(f"preds_{cfg.name}_sha256", sha256_file(preds_path))
        manifest.set(f"model_{cfg.name}_algorithm", cfg.algorithm)
        manifest.set(f"model_{cfg.name}_rating_scale", str(rating_scale).lower())
        manifest.set(f"model_{cfg.name}_seed", cfg.seed)
        manifest.set(f"model_{cfg.name}_cold_users", len(recs.cold_users))
        print(f"model {cfg.name}: recs written ({recs.n_lists} users)")

    manifest.save(config.outdir)
    record_timing(config.outdir, "run", time.perf_counter() - started)
    if failures:
        print(f"failed models: {', '.join(failures)}", file=sys.stderr)
        return 1
    return 0


def _load_split_view(path: Path, dataset: Dataset) -> Dataset:
    if not path.exists():
        raise FairbookError(f"missing split file {path}; run the run command first")
    data = np.loadtxt(path, dtype=np.int64, delimiter=",", skiprows=1, ndmin=2)
    return Dataset(
        n_users=dataset.n_users,
        n_items=dataset.n_items,
        users=data[:, 0].copy(),
        items=data[:, 1].copy(),
        ratings=data[:, 2].copy(),
        user_ids=dataset.user_ids,
        item_ids=dataset.item_ids,
    )


@dataclass
class ModelEvaluation:
    name: str
    rank: RankMetrics
    mae: MaeResult | None
    gap_rows: dict[str, tuple[float, float, float]]  # group -> (gap_p, gap_r, dgap)
    freq: FrequencyReport


def _evaluate_model(
    name: str,
    recs: RecommendationList,
    dataset: Dataset,
    test: Dataset,
    pop,
    groups,
    mae_result: MaeResult | None,
) -> ModelEvaluation:
    rank = rank_metrics(recs, test)
    gap_rows = {}
    profiles = dataset.user_profiles
    for g in GROUPS:
        members = groups.members(g)
        covered = [u for u in members.tolist() if u in recs.lists]
        if not covered:
            raise FairbookError(f"recs for {name} cover no users in group {g}")
        gap_p = gap(members.tolist(), profiles, pop.phi)
        gap_r = gap(covered, {u: recs.lists[u][0] for u in covered}, pop.phi)
        gap_rows[g] = (gap_p, gap_r, delta_gap(gap_r, gap_p))
    freq = recommendation_frequency_correlation(recs, pop)
    return ModelEvaluation(name, rank, mae_result, gap_rows, freq)


def cmd_evaluate(config: RunConfig) -> int:
    started = time.perf_counter()
    outdir = Path(config.outdir)
    manifest = _base_manifest(config)
    dataset = _load_prepared(config, manifest)

    run_sha = manifest.get("run_dataset_sha256")
    if run_sha and run_sha != manifest.get("dataset_sha256"):
        raise FairbookError(
            "recs files were produced against a different dataset checksum; rerun run"
        )
    test = _load_split_view(outdir / "test.csv", dataset)
    recorded_test = manifest.get("test_sha256")
    if recorded_test and recorded_test != sha256_file(outdir / "test.csv"):
        raise FairbookError("test.csv checksum does not match manifest; rerun run")

    pop = compute_item_popularity(dataset)
    stats = user_profile_stats(dataset, pop)
    groups = assign_groups(stats)

    evaluations: list[ModelEvaluation] = []
    for model in config.models:
        name = model.resolved().name
        recs_path = outdir / f"recs_{name}.csv"
        if not recs_path.exists():
            raise FairbookError(f"missing recommendations file {recs_path}; run the run command")
        recorded = manifest.get(f"recs_{name}_sha256")
        if recorded and recorded != sha256_file(recs_path):
            raise FairbookError(f"{recs_path} does not match the manifest checksum; rerun run")
        recs = import_external_recommendations(
            recs_path, dataset.n_users, dataset.n_items, strict=config.strict, name=name
        )
        mae_result = None
        preds_path = outdir / f"preds_{name}.csv"
        if preds_path.exists():
            preds = np.loadtxt(preds_path, delimiter=",", skiprows=1, ndmin=2)
            if preds.shape[0] != test.n_interactions or not (
                np.array_equal(preds[:, 0].astype(np.int64), test.users)
                and np.array_equal(preds[:, 1].astype(np.int64), test.items)
            ):
                raise FairbookError(f"{preds_path} does not align with test.csv; rerun run")
            rating_scale = manifest.get(f"model_{name}_rating_scale", "false") == "true"
            mae_result = mae_from_scores(test, preds[:, 2], rating_scale)
        evaluations.append(
            _evaluate_model(name, recs, dataset, test, pop, groups, mae_result)
        )

    for imp in config.imports:
        recs = import_external_recommendations(
            imp.path, dataset.n_users, dataset.n_items, strict=config.strict, name=imp.name
        )
        evaluations.append(
            _evaluate_model(imp.name, recs, dataset, test, pop, groups, None)
        )

    if not evaluations:
        raise FairbookError("nothing to evaluate: no models or imports configured")

    _write_evaluation_outputs(config, outdir, dataset, test, pop, groups, evaluations)
    manifest.save(config.outdir)
    record_timing(config.outdir, "evaluate", time.perf_counter() - started)
    print(f"evaluated {len(evaluations)} recommendation sets; see {outdir / 'summary.txt'}")
    return 0


def _write_evaluation_outputs(config, outdir, dataset, test, pop, groups, evaluations):
    metric_names = ("mae", "precision", "recall", "ndcg")

    for ev in evaluations:
        mae_by_user = {}
        if ev.mae is not None:
            mae_by_user = dict(zip(ev.mae.users.tolist(), ev.mae.mae))
        buf = io.StringIO()
        buf.write("user_index,group,mae,precision,recall,ndcg\n")
        for pos, u in enumerate(ev.rank.users.tolist()):
            mae_value = mae_by_user.get(u, float("nan"))
            buf.write(
                f"{u},{groups.label(u)},{fmt_float(mae_value)},"
                f"{fmt_float(ev.rank.precision[pos])},{fmt_float(ev.rank.recall[pos])},"
                f"{fmt_float(ev.rank.ndcg[pos])}\n"
            )
        atomic_write_text(outdir / f"accuracy_{ev.name}.csv", buf.getvalue())

        buf = io.StringIO()
        buf.write("item_index,phi,rec_count\n")
        for i in range(dataset.n_items):
            buf.write(f"{i},{fmt_float(pop.phi[i])},{ev.freq.rec_count[i]}\n")
        atomic_write_text(outdir / f"freq_{ev.name}.csv", buf.getvalue())

        buf = io.StringIO()
        buf.write("metric,group_a,group_b,t,p,significant\n")
        for metric in metric_names:
            values = _metric_values(ev, metric)
            if values is None:
                continue
            users, vals = values
            try:
                results = group_significance_test(users, vals, groups)
            except ValueError:
                continue
            for res in results:
                buf.write(
                    f"{metric},{res.group_a},{res.group_b},{fmt_float(res.t)},"
                    f"{fmt_float(res.p)},{int(res.significant)}\n"
                )
        atomic_write_text(outdir / f"significance_{ev.name}.csv", buf.getvalue())

    buf = io.StringIO()
    buf.write("algorithm,group,gap_p,gap_r,delta_gap_ratio,delta_gap_pct\n")
    for ev in evaluations:
        for g in GROUPS:
            gap_p, gap_r, dgap = ev.gap_rows[g]
            buf.write(
                f"{ev.name},{g},{fmt_float(gap_p)},{fmt_float(gap_r)},"
                f"{fmt_float(dgap)},{fmt_float(100.0 * dgap)}\n"
            )
    atomic_write_text(outdir / "gap_report.csv", buf.getvalue())

    tradeoff: dict[str, list[tuple[str, float, float]]] = {g: [] for g in GROUPS}
    for ev in evaluations:
        group_ndcg = _group_means(ev.rank.users, ev.rank.ndcg, groups)
        for g in GROUPS:
            if not np.isnan(group_ndcg[g]):
                tradeoff[g].append((ev.name, group_ndcg[g], 100.0 * ev.gap_rows[g][2]))
    for g in GROUPS:
        buf = io.StringIO()
        buf.write("algorithm,ndcg,delta_gap_pct\n")
        for name, ndcg, dgap_pct in tradeoff[g]:
            buf.write(f"{name},{fmt_float(ndcg)},{fmt_float(dgap_pct)}\n")
        atomic_write_text(outdir / f"tradeoff_{GROUP_SLUGS[g]}.csv", buf.getvalue())

    buf = io.StringIO()
    buf.write("group,r,p,n_algorithms\n")
    tradeoff_rp = {}
    for g in GROUPS:
        points = tradeoff[g]
        if len(points) >= 3:
            try:
                r, p = tradeoff_correlation([x for _, x, _ in points], [y for _, _, y in points])
                tradeoff_rp[g] = (r, p)
                buf.write(f"{g},{fmt_float(r)},{fmt_float(p)},{len(points)}\n")
            except FairbookError:
                pass
    atomic_write_text(outdir / "tradeoff_correlations.csv", buf.getvalue())

    _write_summary(config, outdir, dataset, test, groups, evaluations, tradeoff_rp)


def _metric_values(ev: ModelEvaluation, metric: str):
    if metric == "mae":
        if ev.mae is None:
            return None
        return ev.mae.users, ev.mae.mae
    return ev.rank.users, getattr(ev.rank, metric)


def _group_means(users: np.ndarray, values: np.ndarray, groups) -> dict[str, float]:
    out = {}
    user_list = users.tolist()
    for g in GROUPS:
        members = set(groups.members(g).tolist())
        mask = np.fromiter((u in members for u in user_list), bool, len(user_list))
        out[g] = float(values[mask].mean()) if mask.any() else float("nan")
    return out


def _write_summary(config, outdir, dataset, test, groups, evaluations, tradeoff_rp):
    lines = []
    lines.append("fairbook evaluation summary")
    lines.append("===========================")
    lines.append(
        "significance: Welch unpaired two-tailed t-test at p < 0.05 (the compared "
        "groups are disjoint user sets of different sizes, so a paired test has "
        "no defined pairing)"
    )
    lines.append(
        "dGAP is reported both as a ratio and as a percentage; MAE for "
        "ranking-scale models is min-max rescaled to [1, 10] and flagged."
    )
    lines.append("")
    sizes = groups.sizes()
    lines.append(
        f"dataset: users={dataset.n_users} items={dataset.n_items} "
        f"interactions={dataset.n_interactions}"
    )
    lines.append(
        f"split: ratio={config.split_ratio} seed={config.seed} test={test.n_interactions}"
    )
    lines.append(
        f"groups: niche={sizes[NICHE]} diverse={sizes[DIVERSE]} bestseller={sizes[BESTSELLER]}"
    )
    lines.append("")
    lines.append("Accuracy by group (means over users with test interactions)")
    header = f"{'algorithm':<12} {'group':<18} {'mae':>9} {'precision':>10} {'recall':>9} {'ndcg':>9}"
    lines.append(header)
    for ev in evaluations:
        mae_means = (
            _group_means(ev.mae.users, ev.mae.mae, groups) if ev.mae is not None else None
        )
        ndcg_means = _group_means(ev.rank.users, ev.rank.ndcg, groups)
        prec_means = _group_means(ev.rank.users, ev.rank.precision, groups)
        rec_means = _group_means(ev.rank.users, ev.rank.recall, groups)
        scale_note = " (scale-adjusted)" if ev.mae is not None and ev.mae.scale_adjusted else ""
        for pos, g in enumerate(GROUPS):
            mae_text = fmt_float(mae_means[g]) if mae_means else "n/a"
            lines.append(
                f"{ev.name:<12} {g:<18} {mae_text:>9} {fmt_float(prec_means[g]):>10} "
                f"{fmt_float(rec_means[g]):>9} {fmt_float(ndcg_means[g]):>9}"
                + (scale_note if pos == 0 else "")
            )
    lines.append("")
    lines.append("Group average popularity (dGAP)")
    lines.append(f"{'algorithm':<12} {'group':<18} {'gap_p':>9} {'gap_r':>9} {'dgap':>9} {'dgap_pct':>9}")
    for ev in evaluations:
        for g in GROUPS:
            gap_p, gap_r, dgap = ev.gap_rows[g]
            lines.append(
                f"{ev.name:<12} {g:<18} {fmt_float(gap_p):>9} {fmt_float(gap_r):>9} "
                f"{fmt_float(dgap):>9} {fmt_float(100 * dgap):>9}"
            )
    lines.append("")
    lines.append("Popularity-frequency correlation per algorithm")
    for ev in evaluations:
        lines.append(f"{ev.name:<12} r={fmt_float(ev.freq.r)} p={fmt_float(ev.freq.p)}")
    lines.append("")
    lines.append("NDCG vs dGAP tradeoff (Pearson over algorithms)")
    for g, (r, p) in tradeoff_rp.items():
        lines.append(f"{g:<18} r={fmt_float(r)} p={fmt_float(p)}")
    atomic_write_text(outdir / "summary.txt", "\n".join(lines) + "\n")


def cmd_report(config: RunConfig) -> int:
    path = Path(config.outdir) / "summary.txt"
    if not path.exists():
        raise FairbookError(f"missing {path}; run the evaluate command first")
    print(path.read_text(encoding="utf-8"), end="")
    return 0


if __name__ == "__main__":
    sys.exit(main())

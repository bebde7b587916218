"""Command-line front: corpus generation, model training, stream replay,
the serving runtime, state snapshots, and offline scoring reports."""
import argparse
import json
import os
import shutil
import signal
import sys
from datetime import timedelta
from pathlib import Path


def _jsonl(path):
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


def _write_report(report: dict, out_path: str) -> None:
    from newswire.evalkit import render_table

    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    Path(out_path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    sys.stdout.write(render_table(report))


def _resolve(path: str) -> str:
    """Relative paths fall back to $NEWSWIRE_DATA_DIR when not found here."""
    if os.path.exists(path) or os.path.isabs(path):
        return path
    root = os.environ.get("NEWSWIRE_DATA_DIR")
    if root and os.path.exists(os.path.join(root, path)):
        return os.path.join(root, path)
    return path


# ------------------------------------------------------------------- corpus


def cmd_corpus(args) -> int:
    from newswire.model import tweet_to_json
    from newswire.synthcorpus import desk_scenario

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    gold_rows, tweets, truth = desk_scenario(
        seed=args.seed, n_events=args.events, n_noise=args.noise,
        horizon_h=args.hours)
    with open(out / "stream.jsonl", "w") as fh:
        for t in tweets:
            fh.write(json.dumps(tweet_to_json(t)) + "\n")
    with open(out / "gold.jsonl", "w") as fh:
        for row in gold_rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    (out / "truth.json").write_text(json.dumps(truth, indent=0, sort_keys=True))
    span_h = (tweets[-1].created_at - tweets[0].created_at).total_seconds() / 3600
    print(f"wrote {len(tweets)} tweets over {span_h:.1f} h, "
          f"{len(gold_rows)} gold events -> {out}")
    return 0


# ----------------------------------------------------------------- training


def cmd_train(args) -> int:
    from newswire.pipeline import train_default_models

    train_default_models(args.out, scale=args.scale)
    print(f"artifacts written to {args.out}")
    return 0


def _labeled_corpus(path):
    from newswire.model import tweet_from_json

    return [(tweet_from_json(row["tweet"]), row["label"]) for row in _jsonl(path)]


def cmd_train_noise(args) -> int:
    from newswire.noisefilter import NoiseFilter, calibrate_thresholds, train_stage_models

    if args.corpus:
        corpus = _labeled_corpus(_resolve(args.corpus))
    else:
        from newswire.synthcorpus import noise_corpus
        corpus = noise_corpus(size=10000)
    models = train_stage_models(corpus)
    report = calibrate_thresholds(models, corpus, args.max_fn)
    NoiseFilter(models).save(str(Path(args.out) / "noise"))
    print(json.dumps({
        "thresholds": report.thresholds,
        "filtered_fraction": round(report.filtered_fraction, 4),
        "news_false_negative_rate": round(report.news_false_negative_rate, 4),
        "infeasible": report.infeasible,
    }, indent=2))
    if report.infeasible:
        print("calibration infeasible at the requested false-negative bound",
              file=sys.stderr)
        return 1
    return 0


def cmd_train_news(args) -> int:
    from newswire.newsworthy import train_object_model
    from newswire.topicmodel import train_topic_model

    window = {"long": "long_term", "short": "short_term"}[args.window]
    if args.corpus:
        with open(_resolve(args.corpus), encoding="utf-8") as fh:
            texts = [line.strip() for line in fh if line.strip()]
    else:
        from newswire.synthcorpus import news_account_corpus
        texts = news_account_corpus(window, 1500 if args.window == "long" else 800)
    topics = [int(k) for k in args.topics.split(",")]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seed = 11 if args.window == "long" else 13
    model = train_topic_model(texts, topics, window, seed=seed)
    model.save(str(out / f"topic_{args.window}.json"))
    train_object_model(texts, window).save(str(out / f"object_{args.window}.json"))
    print(f"{args.window}-window topic model ({model.n} topics) "
          f"and entity model -> {out}")
    return 0


# ------------------------------------------------------------------- ingest


def cmd_ingest(args) -> int:
    from newswire.ingest import (
        IngestStats, SourceSpec, StreamConfig, Taxonomy,
        open_replay_stream, taxonomy_filter,
    )
    from newswire.model import StreamTag, tweet_to_json

    sources = [SourceSpec(path=_resolve(args.sample), stream_tag=StreamTag.SAMPLE)]
    if args.filtered:
        sources.append(SourceSpec(path=_resolve(args.filtered),
                                  stream_tag=StreamTag.FILTERED))
    taxonomy = (Taxonomy.from_file(_resolve(args.taxonomy))
                if args.taxonomy else Taxonomy.default())
    stats = IngestStats()
    stream = open_replay_stream(
        StreamConfig(sources=sources, speed_factor=args.speed,
                     english_only=not args.all_languages),
        stats)
    sink = open(args.out, "w") if args.out else None
    emitted = 0
    dropped_taxonomy = 0
    try:
        for tweet in stream:
            # the filtered stream only exists because of the taxonomy;
            # replaying it re-applies the same membership test
            if tweet.stream_tag is StreamTag.FILTERED and not taxonomy_filter(tweet, taxonomy):
                dropped_taxonomy += 1
                continue
            emitted += 1
            if sink:
                sink.write(json.dumps(tweet_to_json(tweet)) + "\n")
    finally:
        if sink:
            sink.close()
    print(json.dumps({
        "emitted": emitted,
        "malformed": stats.malformed,
        "duplicates": stats.duplicates,
        "dropped_language": stats.dropped_language,
        "dropped_taxonomy": dropped_taxonomy,
    }, indent=2))
    return 0


# ------------------------------------------------------------------ runtime


def cmd_run(args) -> int:
    from newswire.pipeline import MissingArtifacts, Pipeline, PipelineConfig

    config = PipelineConfig.load(args.config)
    try:
        pipe = Pipeline(config)
    except MissingArtifacts as exc:
        print(exc, file=sys.stderr)
        return 2
    # provenance copy so a run directory is self-describing
    data_dir = Path(config.data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    (data_dir / "config.json").write_text(
        json.dumps(config.to_json(), indent=2, sort_keys=True))

    if args.drain:
        pipe.run_until_drained()
        if args.snapshot:
            pipe.snapshot_state(args.snapshot)
            shutil.copy(data_dir / "config.json", Path(args.snapshot) / "config.json")
        print(json.dumps(pipe.metrics.report(), indent=2, sort_keys=True))
        pipe.close()
        return 0

    from newswire.api import ApiServer

    pipe.start()
    server = ApiServer(pipe, host=args.host, port=args.port,
                       static_dir=args.static)
    server.start()
    print(f"serving on {server.address} (Ctrl-C to stop)")
    stop = {"flag": False}
    signal.signal(signal.SIGTERM, lambda *_: stop.update(flag=True))
    try:
        while not stop["flag"]:
            signal.pause()
    except KeyboardInterrupt:
        pass
    print("shutting down, draining logs")
    server.stop()
    pipe.shutdown(drain=True)
    pipe.close()
    return 0


def cmd_snapshot(args) -> int:
    from newswire.pipeline import MissingArtifacts, PipelineConfig, resume_pipeline

    config = PipelineConfig.load(args.config)
    try:
        pipe = resume_pipeline(config, args.resume)
    except MissingArtifacts as exc:
        print(exc, file=sys.stderr)
        return 2
    pipe.run_until_drained()
    pipe.snapshot_state(args.out)
    (Path(args.out) / "config.json").write_text(
        json.dumps(config.to_json(), indent=2, sort_keys=True))
    pipe.close()
    print(f"snapshot written to {args.out}")
    return 0


# ------------------------------------------------------------------ scoring


def _load_run(run_dir: str):
    """Accepts a snapshot directory or a run directory containing one."""
    base = Path(run_dir)
    for candidate in (base, base / "snapshot"):
        if (candidate / "serving.json").exists():
            return candidate
    raise SystemExit(f"no serving.json under {run_dir}; "
                     "point --run at a snapshot directory")


def _load_clusters(snap: Path):
    from newswire.model import EventCluster

    serving = json.loads((snap / "serving.json").read_text())
    return [EventCluster.from_json(blob) for _, blob in sorted(serving.items())]


def _load_gold(path: str):
    from newswire.evalkit import GoldEvent

    return [GoldEvent.from_json(row) for row in _jsonl(path)]


def _match(gold, clusters, window_h: float, threshold: float):
    from newswire.evalkit import coverage_eval

    cov = coverage_eval(gold, clusters, window=timedelta(hours=window_h),
                        threshold=threshold)
    by_id = {c.cluster_id: c for c in clusters}
    matched = {r["event_id"]: by_id[r["best_cluster"]]
               for r in cov["rows"] if r["covered"]}
    return cov, matched


def cmd_eval(args) -> int:
    snap = _load_run(args.run)

    if args.report == "alertability":
        from newswire.evalkit import alertability_report

        feeds = json.loads((snap / "feeds.json").read_text())
        emissions = [row["item"] for name, state in sorted(feeds.items())
                     if args.profile in (None, name)
                     for row in state["log"]]
        gold = json.loads(Path(args.gold).read_text())
        labels = gold.get("labels", gold if all(
            isinstance(v, bool) for v in gold.values()) else {})
        report = alertability_report(emissions, labels,
                                     curated_events=gold.get("curated"))
        _write_report(report, args.out)
        return 0

    gold = _load_gold(args.gold)
    clusters = _load_clusters(snap)

    if args.report == "coverage":
        from newswire.evalkit import coverage_eval

        report = coverage_eval(gold, clusters,
                               window=timedelta(hours=args.window_hours),
                               threshold=args.threshold)
        _write_report(report, args.out)
        return 0

    cov, matched = _match(gold, clusters, args.window_hours, args.threshold)

    if args.report == "leadtime":
        from newswire.evalkit import lead_time

        report = lead_time(gold, {eid: c.created_at for eid, c in matched.items()})
        _write_report(report, args.out)
        return 0

    if args.report == "ndcg":
        from newswire.evalkit import GRADE_GAIN, ndcg_eval

        rows, skipped = [], 0
        for event in gold:
            cluster = matched.get(event.event_id)
            if (cluster is None or event.newsworthiness is None
                    or cluster.newsworthiness is None):
                skipped += 1
                continue
            rows.append((cluster.newsworthiness.combined,
                         GRADE_GAIN[event.newsworthiness]))
        report = ndcg_eval(rows)
        report["events_scored"] = len(rows)
        report["events_skipped"] = skipped
        _write_report(report, args.out)
        return 0

    # veracity: rescore each matched cluster as it looked at 3 and 30 members
    from newswire.evalkit import veracity_eval
    from newswire.synthcorpus import early_view
    from newswire.veracity import VeracityModel
    from newswire.veracity import score_cluster as score_veracity

    models_dir = args.models
    if models_dir is None and (snap / "config.json").exists():
        models_dir = json.loads((snap / "config.json").read_text())["models_dir"]
    if models_dir is None:
        raise SystemExit("veracity needs --models or a config.json in the run dir")
    model = VeracityModel.load(str(Path(models_dir) / "veracity.json"))
    rows, skipped = [], 0
    for event in gold:
        cluster = matched.get(event.event_id)
        if cluster is None or event.veracity is None or cluster.size < 3:
            skipped += 1
            continue
        v3 = score_veracity(early_view(cluster, 3), None, model).value
        v30 = score_veracity(early_view(cluster, 30), None, model).value
        rows.append((v3, v30, event.veracity))
    report = veracity_eval(rows)
    report["events_skipped"] = skipped
    _write_report(report, args.out)
    return 0


# -------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="newswire")
    sub = p.add_subparsers(dest="cmd", required=True)

    c = sub.add_parser("corpus", help="materialize the bundled replay corpus")
    c.add_argument("--out", required=True)
    c.add_argument("--events", type=int, default=200)
    c.add_argument("--noise", type=int, default=45000)
    c.add_argument("--seed", type=int, default=8800)
    c.add_argument("--hours", type=float, default=None,
                   help="span; default scales with --events")
    c.set_defaults(fn=cmd_corpus)

    t = sub.add_parser("train", help="fit every model artifact in one pass")
    t.add_argument("--out", required=True)
    t.add_argument("--scale", type=float, default=1.0,
                   help="corpus-size multiplier; <1 is faster and rougher")
    t.set_defaults(fn=cmd_train)

    tn = sub.add_parser("train-noise", help="fit and calibrate the tweet filter cascade")
    tn.add_argument("--corpus", help="labeled JSONL; bundled corpus when omitted")
    tn.add_argument("--max-fn", type=float, default=0.01)
    tn.add_argument("--out", required=True)
    tn.set_defaults(fn=cmd_train_noise)

    tw = sub.add_parser("train-news", help="fit topic and entity models for one window")
    tw.add_argument("--corpus", help="one text per line; bundled corpus when omitted")
    tw.add_argument("--window", choices=["long", "short"], required=True)
    tw.add_argument("--topics", default="10,20",
                    help="comma-separated candidate topic counts")
    tw.add_argument("--out", required=True)
    tw.set_defaults(fn=cmd_train_news)

    i = sub.add_parser("ingest", help="replay sources as one merged stream")
    i.add_argument("--sample", required=True)
    i.add_argument("--filtered")
    i.add_argument("--taxonomy", help="kw:/user: lines; bundled list when omitted")
    i.add_argument("--speed", type=float, default=0.0,
                   help="1.0 = real time, 0 = as fast as possible")
    i.add_argument("--out", help="write merged JSONL here instead of counting only")
    i.add_argument("--all-languages", action="store_true")
    i.set_defaults(fn=cmd_ingest)

    r = sub.add_parser("run", help="run the pipeline, serving HTTP unless --drain")
    r.add_argument("--config", required=True)
    r.add_argument("--drain", action="store_true",
                   help="single-threaded replay to completion, then exit")
    r.add_argument("--snapshot", help="with --drain: write state here at the end")
    r.add_argument("--host", default="127.0.0.1")
    r.add_argument("--port", type=int, default=0)
    r.add_argument("--static", help="directory of console assets to serve at /ui/")
    r.set_defaults(fn=cmd_run)

    s = sub.add_parser("snapshot", help="bring durable state current and export it")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--resume", help="prior snapshot to restore before draining")
    s.set_defaults(fn=cmd_snapshot)

    e = sub.add_parser("eval", help="score a finished run against a gold file")
    e.add_argument("report", choices=["coverage", "leadtime", "ndcg",
                                      "veracity", "alertability"])
    e.add_argument("--gold", required=True)
    e.add_argument("--run", required=True, help="snapshot directory of the run")
    e.add_argument("--out", required=True)
    e.add_argument("--window-hours", type=float, default=24.0)
    e.add_argument("--threshold", type=float, default=0.35)
    e.add_argument("--models", help="model dir for veracity rescoring")
    e.add_argument("--profile", help="restrict alertability to one feed")
    e.set_defaults(fn=cmd_eval)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())

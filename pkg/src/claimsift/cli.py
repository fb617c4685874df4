"""Command-line entry points for every pipeline stage.

Batch stages (ingest, candidates, train, eval, predict, audit-sample,
report) run in-process; `annotate serve` starts the HTTP service, and
`predict --url` acts as a thin client against a running instance.

Exit codes: 2 for usage problems (missing files, bad flags), 3 when a
cross-validation fold aborts, 1 for other pipeline errors.
"""

from __future__ import annotations

import datetime as dt
import functools
import json
import random
import sys
from pathlib import Path

import click
import httpx

from .candidates import DEFAULT_TOP_K, HashingEncoder, PairPool, build_pair_pool
from .corpus import (
    AnnotationStore,
    IngestFilter,
    TweetKind,
    default_ingest_filter,
    load_claims,
    load_tweets,
)
from .detection import (
    CLAIM,
    TfidfLogisticModel,
    TfidfLogisticPort,
    build_detection_dataset,
    oversample_minority,
)
from .errors import ClaimSiftError, CrossValidationError
from .evalharness import (
    DEFAULT_K_GRID,
    Ports,
    RunConfig,
    compare_runs,
    cross_validate,
    dumps_comparison,
    dumps_report,
    load_report,
    plan_for,
    render_comparison,
    render_text,
    result_from_report,
)
from .gateway import (
    GatewayClassifierPort,
    GatewayClient,
    GatewayEndpoint,
    GatewayRanker,
)
from .manifest import new_manifest
from .retrieval import (
    Bm25Ranker,
    TfidfCosineRanker,
    run_pipeline,
    sample_negatives,
)

DEFAULT_SEED = 13


def friendly(fn):
    """Map pipeline errors onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except CrossValidationError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(3)
        except ClaimSiftError as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


@click.group()
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True,
              help="Seed for every random draw in the invocation.")
@click.option("--config", "config_path",
              type=click.Path(exists=True, dir_okay=False), default=None,
              help="Run-config JSON; explicit flags override its values.")
@click.pass_context
def main(ctx, seed, config_path):
    """Fact-checked-claim detection and retrieval pipeline."""
    ctx.ensure_object(dict)
    ctx.obj["seed"] = seed
    ctx.obj["config_path"] = config_path


def _load_corpora(claims_path, tweets_path, ingest=None):
    claims = load_claims(claims_path)
    tweets = load_tweets(tweets_path, ingest or default_ingest_filter())
    return claims, tweets


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


@main.command()
@click.option("--claims", "claims_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--tweets", "tweets_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--out", "out_path", type=click.Path(file_okay=False), required=True)
@click.option("--start-date", type=click.DateTime(["%Y-%m-%d"]), default=None,
              help="Inclusive window start (UTC date).")
@click.option("--end-date", type=click.DateTime(["%Y-%m-%d"]), default=None,
              help="Inclusive window end (UTC date).")
@click.option("--lang", "languages", multiple=True, default=("en",),
              show_default=True)
@click.option("--kind", "kinds", multiple=True,
              type=click.Choice([k.value for k in TweetKind]),
              default=tuple(k.value for k in TweetKind), show_default=True)
@friendly
def ingest(claims_path, tweets_path, out_path, start_date, end_date, languages, kinds):
    """Load, filter, and normalize the claim and tweet corpora."""
    base = default_ingest_filter()
    window = (
        start_date.date() if start_date else base.date_window[0],
        end_date.date() if end_date else base.date_window[1],
    )
    ingest_filter = IngestFilter(
        date_window=window,
        languages=frozenset(languages),
        kinds=frozenset(TweetKind(k) for k in kinds),
    )
    claims, tweets = _load_corpora(claims_path, tweets_path, ingest_filter)
    out = _out_dir(out_path)

    claims_out = out / "claims.json"
    with open(claims_out, "w", encoding="utf-8") as fh:
        json.dump(
            [
                {
                    "id": c.id,
                    "text": c.text,
                    "verdict": c.verdict.value,
                    "verified_date": c.verified_date.isoformat(),
                    "source_url": c.source_url,
                }
                for c in claims
            ],
            fh,
            ensure_ascii=False,
            indent=2,
        )
        fh.write("\n")
    tweets_out = out / "tweets.jsonl"
    with open(tweets_out, "w", encoding="utf-8") as fh:
        for t in tweets:
            fh.write(
                json.dumps(
                    {
                        "id": t.id,
                        "text": t.text,
                        "created_at": t.created_at.isoformat(),
                        "lang": t.lang,
                        "kind": t.kind.value
                        if isinstance(t.kind, TweetKind)
                        else t.kind,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )

    manifest = new_manifest(
        "ingest",
        config={
            "start_date": window[0].isoformat(),
            "end_date": window[1].isoformat(),
            "languages": sorted(languages),
            "kinds": sorted(kinds),
        },
        inputs=[claims_path, tweets_path],
    )
    manifest.counts = {"claims": len(claims), "tweets": len(tweets)}
    manifest.add_output(claims_out)
    manifest.add_output(tweets_out)
    manifest.write(out / "manifest.json")
    click.echo(f"ingested {len(claims)} claims, {len(tweets)} tweets -> {out}")


@main.command()
@click.option("--claims", "claims_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--tweets", "tweets_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--k", type=int, default=DEFAULT_TOP_K, show_default=True,
              help="Tweets kept per claim.")
@click.option("--encoder", "encoder_kind", type=click.Choice(["hash", "gateway"]),
              default="hash", show_default=True)
@click.option("--dim", type=int, default=256, show_default=True,
              help="Hash encoder output dimension.")
@click.option("--gateway-url", default=None, help="Scorer service base URL.")
@click.option("--out", "out_path", type=click.Path(file_okay=False), required=True)
@friendly
def candidates(claims_path, tweets_path, k, encoder_kind, dim, gateway_url, out_path):
    """Rank tweets per claim and emit the candidate pair pool."""
    claims, tweets = _load_corpora(claims_path, tweets_path)
    if encoder_kind == "gateway":
        if not gateway_url:
            raise click.UsageError("--encoder gateway requires --gateway-url")
        from .gateway import GatewayEncoder

        client = GatewayClient(GatewayEndpoint(base_url=gateway_url))
        encoder = GatewayEncoder(client)
    else:
        encoder = HashingEncoder(dim)
    pool = build_pair_pool(claims, tweets, encoder, k=k)
    out = _out_dir(out_path)
    pool_path = out / "pool.jsonl"
    pool.export_jsonl(pool_path)
    manifest = new_manifest(
        "candidates",
        config={"k": k, "encoder": encoder_kind, "dim": dim},
        inputs=[claims_path, tweets_path],
    )
    manifest.counts = {
        "claims": len(claims),
        "tweets": len(tweets),
        "pairs": len(pool.entries),
        "unique_tweets": len(pool.unique_tweets()),
    }
    manifest.add_output(pool_path)
    manifest.write(out / "manifest.json")
    click.echo(
        f"pooled {len(pool.entries)} pairs over {len(pool.unique_tweets())} tweets -> {pool_path}"
    )


@main.group()
def annotate():
    """Annotation workflow commands."""


@annotate.command("serve")
@click.option("--claims", "claims_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--tweets", "tweets_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--pool", "pool_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--annotations", "annotations_path", type=click.Path(dir_okay=False),
              required=True, help="Labels file; loaded if present, updated on every label.")
@click.option("--detector", "detector_path",
              type=click.Path(exists=True, dir_okay=False), default=None,
              help="Trained detector for /predict.")
@click.option("--ranker", "ranker_kind", type=click.Choice(["bm25", "tfidf"]),
              default="bm25", show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8100, show_default=True)
@click.option("--lease-ttl", type=float, default=600.0, show_default=True,
              help="Seconds a served pair stays reserved for its annotator.")
@click.option("--console-dir", type=click.Path(file_okay=False), default=None,
              help="Static console bundle to serve at /console.")
@friendly
def annotate_serve(claims_path, tweets_path, pool_path, annotations_path,
                   detector_path, ranker_kind, host, port, lease_ttl, console_dir):
    """Serve the annotation API (and /predict when models are given)."""
    import uvicorn

    from .service import ServiceState, create_app

    claims, tweets = _load_corpora(claims_path, tweets_path)
    store = AnnotationStore(claims, tweets)
    pool = PairPool.import_jsonl(pool_path)
    detector = TfidfLogisticModel.load(detector_path) if detector_path else None
    ranker = None
    if detector is not None:
        claim_list = list(claims)
        ranker = (
            Bm25Ranker(claim_list) if ranker_kind == "bm25" else TfidfCosineRanker(claim_list)
        )
    state = ServiceState(
        store,
        pool=pool,
        detector=detector,
        ranker=ranker,
        lease_ttl_seconds=lease_ttl,
        annotations_path=annotations_path,
        console_dir=console_dir,
    )
    app = create_app(state)
    click.echo(f"serving on http://{host}:{port} (pairs: {len(store)})")
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
@click.option("--task", type=click.Choice(["detect", "retrieve"]), required=True)
@click.option("--claims", "claims_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--tweets", "tweets_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--annotations", "annotations_path",
              type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--backend", type=click.Choice(["local", "gateway"]), default="local",
              show_default=True)
@click.option("--gateway-url", default=None)
@click.option("--oversample/--no-oversample", default=True, show_default=True)
@click.option("--negatives", type=int, default=10, show_default=True,
              help="Negatives sampled per positive pair (retrieve task).")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.pass_context
@friendly
def train(ctx, task, claims_path, tweets_path, annotations_path, backend,
          gateway_url, oversample, negatives, out_path):
    """Train a detector (local or remote) or a remote pair scorer."""
    seed = ctx.obj["seed"]
    claims, tweets = _load_corpora(claims_path, tweets_path)
    store = AnnotationStore(claims, tweets)
    store.import_jsonl(annotations_path)
    manifest = new_manifest(
        "train",
        config={"task": task, "backend": backend, "seed": seed,
                "oversample": oversample, "negatives": negatives},
        inputs=[claims_path, tweets_path, annotations_path],
    )

    if backend == "gateway" and not gateway_url:
        raise click.UsageError("--backend gateway requires --gateway-url")

    if task == "detect":
        dataset = build_detection_dataset(store)
        if oversample:
            dataset = oversample_minority(dataset, seed=seed)
        if backend == "local":
            model = TfidfLogisticPort().fit(dataset)
            model.save(out_path)
        else:
            client = GatewayClient(GatewayEndpoint(base_url=gateway_url))
            detector = GatewayClassifierPort(client).fit(dataset)
            with open(out_path, "w", encoding="utf-8") as fh:
                json.dump(
                    {"task": "classify", "model_id": detector.model.model_id,
                     "gateway_url": gateway_url},
                    fh, indent=2,
                )
                fh.write("\n")
        manifest.counts = dict(dataset.counts())
    else:
        if backend == "local":
            raise click.ClickException(
                "the local rankers are untrained; use --backend gateway to "
                "fine-tune a remote pair scorer"
            )
        relevant = store.relevant_map()
        positives = [
            (t, c) for t in sorted(relevant) for c in sorted(relevant[t])
        ]
        pairs = sample_negatives(
            positives, store.claims.ids(), n=negatives, seed=seed, relevant=relevant
        )
        tweet_texts = {t: store.tweets[t].text for t, _ in positives}
        claim_texts = {c.id: c.text for c in claims}
        client = GatewayClient(GatewayEndpoint(base_url=gateway_url))
        ranker = GatewayRanker(client).fit(pairs, tweet_texts, claim_texts)
        with open(out_path, "w", encoding="utf-8") as fh:
            json.dump(
                {"task": "score_pairs", "model_id": ranker.model.model_id,
                 "gateway_url": gateway_url},
                fh, indent=2,
            )
            fh.write("\n")
        manifest.counts = dict(pairs.counts())

    manifest.add_output(out_path)
    manifest.write(Path(out_path).with_suffix(".manifest.json"))
    click.echo(f"trained {task} ({backend}) -> {out_path}")


def _build_ports(task, ranker_kind, gateway_url, claims):
    if gateway_url:
        client = GatewayClient(GatewayEndpoint(base_url=gateway_url))
        if task == "detect":
            return Ports(
                classifier=GatewayClassifierPort(client),
                descriptors={"classifier": f"gateway:{gateway_url}"},
            )
        return Ports(
            ranker=GatewayRanker(client),
            descriptors={"ranker": f"gateway:{gateway_url}"},
        )
    if task == "detect":
        return Ports(
            classifier=TfidfLogisticPort(),
            descriptors={"classifier": "tfidf-logistic"},
        )
    claim_list = list(claims)
    ranker = Bm25Ranker(claim_list) if ranker_kind == "bm25" else TfidfCosineRanker(claim_list)
    return Ports(ranker=ranker, descriptors={"ranker": ranker_kind})


@main.command("eval")
@click.option("--task", type=click.Choice(["detect", "retrieve"]), required=True)
@click.option("--mode", type=click.Choice(["lto", "lco"]), required=True)
@click.option("--claims", "claims_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--tweets", "tweets_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--annotations", "annotations_path",
              type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--n-folds", type=int, default=5, show_default=True)
@click.option("--oversample/--no-oversample", default=True, show_default=True)
@click.option("--negatives", type=int, default=10, show_default=True)
@click.option("--k", "k_grid", multiple=True, type=int,
              help="HitRatio cutoffs; defaults to 1 3 5 10 20.")
@click.option("--threshold", type=float, default=0.5, show_default=True)
@click.option("--ranker", "ranker_kind", type=click.Choice(["bm25", "tfidf"]),
              default="bm25", show_default=True)
@click.option("--gateway-url", default=None,
              help="Train/evaluate through a scorer service instead of local models.")
@click.option("--out", "out_path", type=click.Path(file_okay=False), required=True)
@click.pass_context
@friendly
def eval_cmd(ctx, task, mode, claims_path, tweets_path, annotations_path, n_folds,
             oversample, negatives, k_grid, threshold, ranker_kind, gateway_url,
             out_path):
    """Cross-validated evaluation; writes report.json, report.txt, manifest.json."""
    seed = ctx.obj["seed"]
    base = {}
    if ctx.obj.get("config_path"):
        with open(ctx.obj["config_path"], "r", encoding="utf-8") as fh:
            base = json.load(fh)
    config = RunConfig(
        task=task,
        mode=mode,
        n_folds=n_folds if n_folds != 5 else int(base.get("n_folds", n_folds)),
        seed=seed if seed != DEFAULT_SEED else int(base.get("seed", seed)),
        oversample=oversample,
        negatives_per_positive=negatives,
        k_grid=tuple(k_grid) if k_grid else tuple(base.get("k_grid", DEFAULT_K_GRID)),
        threshold=threshold,
    )
    claims, tweets = _load_corpora(claims_path, tweets_path)
    store = AnnotationStore(claims, tweets)
    store.import_jsonl(annotations_path)
    ports = _build_ports(task, ranker_kind, gateway_url, claims)
    plan = plan_for(store, config)
    result = cross_validate(task, plan, ports, config, store)

    out = _out_dir(out_path)
    report_path = out / "report.json"
    with open(report_path, "w", encoding="utf-8") as fh:
        fh.write(dumps_report(result))
    text_path = out / "report.txt"
    with open(text_path, "w", encoding="utf-8") as fh:
        fh.write(render_text(result))
    manifest = new_manifest(
        "eval", config=result.config.to_dict(),
        inputs=[claims_path, tweets_path, annotations_path],
    )
    manifest.counts = {
        "folds": plan.n_folds,
        "dropped_pairs": result.dropped_pairs,
    }
    manifest.add_output(report_path)
    manifest.add_output(text_path)
    manifest.write(out / "manifest.json")
    click.echo(render_text(result), nl=False)
    click.echo(f"report -> {report_path}")


@main.command()
@click.option("--text", default=None, help="Single text to classify and rank.")
@click.option("--tweets", "tweets_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Batch mode: JSONL tweets to run through the cascade.")
@click.option("--url", default=None, help="POST to a running service instead of local models.")
@click.option("--claims", "claims_path", type=click.Path(exists=True, dir_okay=False),
              default=None)
@click.option("--detector", "detector_path",
              type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--ranker", "ranker_kind", type=click.Choice(["bm25", "tfidf"]),
              default="bm25", show_default=True)
@click.option("--top-n", type=int, default=3, show_default=True)
@click.option("--threshold", type=float, default=0.5, show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Batch mode output file (JSONL).")
@friendly
def predict(text, tweets_path, url, claims_path, detector_path, ranker_kind,
            top_n, threshold, out_path):
    """Run the detect-then-retrieve cascade on one text or a tweet file."""
    if (text is None) == (tweets_path is None):
        raise click.UsageError("pass exactly one of --text or --tweets")

    if url:
        if text is None:
            raise click.UsageError("--url mode takes --text")
        response = httpx.post(f"{url.rstrip('/')}/predict", json={"text": text},
                              timeout=30.0)
        if response.status_code != 200:
            raise click.ClickException(
                f"service returned {response.status_code}: {response.text}"
            )
        click.echo(json.dumps(response.json(), indent=2, sort_keys=True))
        return

    if not claims_path or not detector_path:
        raise click.UsageError("local mode needs --claims and --detector")
    claims = load_claims(claims_path)
    claim_list = list(claims)
    detector = TfidfLogisticModel.load(detector_path)
    ranker = (
        Bm25Ranker(claim_list) if ranker_kind == "bm25" else TfidfCosineRanker(claim_list)
    )

    if text is not None:
        from .corpus import Tweet

        tweet = Tweet("adhoc", text, dt.datetime.now(dt.timezone.utc), "en",
                      TweetKind.ORIGINAL)
        record = run_pipeline(detector, ranker, tweet, claim_list,
                              top_n=top_n, threshold=threshold)
        click.echo(json.dumps(record.to_json_dict(), indent=2, sort_keys=True))
        return

    tweets = load_tweets(tweets_path, default_ingest_filter())
    if not out_path:
        raise click.UsageError("batch mode needs --out")
    records = []
    for tweet in tweets:
        records.append(
            run_pipeline(detector, ranker, tweet, claim_list,
                         top_n=top_n, threshold=threshold)
        )
    with open(out_path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_json_dict(), sort_keys=True) + "\n")
    gated_in = sum(1 for r in records if r.gate == CLAIM)
    manifest = new_manifest(
        "predict",
        config={"ranker": ranker_kind, "top_n": top_n, "threshold": threshold},
        inputs=[claims_path, tweets_path, detector_path],
    )
    manifest.counts = {"tweets": len(records), "gated_in": gated_in}
    manifest.add_output(out_path)
    manifest.write(Path(out_path).with_suffix(".manifest.json"))
    click.echo(f"predicted {len(records)} tweets ({gated_in} passed the gate) -> {out_path}")


@main.command("audit-sample")
@click.option("--predictions", "predictions_path",
              type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--n-per-class", type=int, default=100, show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.pass_context
@friendly
def audit_sample(ctx, predictions_path, n_per_class, out_path):
    """Draw a manual-verification worksheet from a predictions file."""
    seed = ctx.obj["seed"]
    positives, negatives = [], []
    with open(predictions_path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            (positives if row.get("gate") == CLAIM else negatives).append(row)
    rng = random.Random(seed)
    rows = []
    for name, bucket in (("claim", positives), ("no_claim", negatives)):
        take = min(n_per_class, len(bucket))
        if take < n_per_class:
            click.echo(
                f"warning: only {len(bucket)} predicted-{name} rows available, taking all",
                err=True,
            )
        rows.extend(rng.sample(bucket, take))
    with open(out_path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(
                json.dumps(
                    {
                        "tweet_id": row["tweet_id"],
                        "predicted_gate": row["gate"],
                        "gate_probability": row["gate_probability"],
                        "top_claims": [r["claim_id"] for r in row.get("results", [])],
                        "manual_verdict": "",
                        "notes": "",
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    manifest = new_manifest(
        "audit-sample", config={"n_per_class": n_per_class, "seed": seed},
        inputs=[predictions_path],
    )
    manifest.counts = {"rows": len(rows)}
    manifest.add_output(out_path)
    manifest.write(Path(out_path).with_suffix(".manifest.json"))
    click.echo(f"sampled {len(rows)} rows -> {out_path}")


@main.command()
@click.option("--run", "run_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Render one machine report as text.")
@click.option("--baseline", "baseline_path",
              type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--candidate", "candidate_path",
              type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Also write the comparison as JSON.")
@friendly
def report(run_path, baseline_path, candidate_path, out_path):
    """Render a run report, or compare two runs with significance marks."""
    if run_path and not (baseline_path or candidate_path):
        result = result_from_report(load_report(run_path))
        click.echo(render_text(result), nl=False)
        return
    if baseline_path and candidate_path:
        baseline = result_from_report(load_report(baseline_path))
        candidate = result_from_report(load_report(candidate_path))
        comparison = compare_runs(baseline, candidate)
        click.echo(render_comparison(comparison), nl=False)
        if out_path:
            with open(out_path, "w", encoding="utf-8") as fh:
                fh.write(dumps_comparison(comparison))
            click.echo(f"comparison -> {out_path}")
        return
    raise click.UsageError("pass --run, or both --baseline and --candidate")


if __name__ == "__main__":
    main()

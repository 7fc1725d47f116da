"""Command-line surface: neighbors | classify | eval | sweep | whiten-fit.

Runs are driven by a JSON config file; a handful of flags (--k, --metric,
--weights, --mode, --parallel, --backend-url) override the config. Every
command validates the whole configuration it needs before doing any work,
so an invalid config never leaves partial output files behind.

Exit codes: 0 success, 1 config error, 2 data error, 3 backend error.
NPPROMPT_LOG sets the log level (DEBUG/INFO/WARNING/...).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import evaluation, tensorio
from .aggregator import ScoreMode
from .backend import FileBackend, HTTPBackend
from .errors import ConfigError, DataError, NPPromptError
from .prompting import parse_template
from .tensorio import read_dataset, read_logits_batch, read_tensor, read_vocab
from .verbalizer import (
    LabelSpec,
    SimilarityMetric,
    WeightScheme,
    embed_label,
    fit_whitening,
    topk_neighbors,
    whiten,
)

logger = logging.getLogger("npprompt")

_METRICS = {m.value: m for m in SimilarityMetric}
_SCHEMES = {s.value: s for s in WeightScheme}


class RunConfig:
    """Validated run configuration: raw dict plus typed accessors."""

    def __init__(self, raw: dict, base_dir: str = "."):
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        self.raw = raw
        self.base_dir = base_dir

    def path(self, key: str, required: bool = False) -> str | None:
        value = self.raw.get(key)
        if value is None:
            if required:
                raise ConfigError(f"config key {key!r} is required for this command")
            return None
        if not isinstance(value, str):
            raise ConfigError(f"config key {key!r} must be a path string")
        resolved = value if os.path.isabs(value) else os.path.join(self.base_dir, value)
        if not os.path.exists(resolved):
            raise ConfigError(f"config key {key!r}: file not found: {resolved}")
        return resolved

    @property
    def k(self) -> int:
        k = self.raw.get("k")
        if not isinstance(k, int) or k < 1:
            raise ConfigError(f"config key 'k' must be an integer >= 1, got {k!r}")
        return k

    @property
    def metric(self) -> SimilarityMetric:
        name = self.raw.get("metric", "cosine")
        if name not in _METRICS:
            raise ConfigError(f"unknown similarity metric {name!r}")
        return _METRICS[name]

    @property
    def scheme(self) -> WeightScheme:
        name = self.raw.get("weights", "softmax")
        if name not in _SCHEMES:
            raise ConfigError(f"unknown weight scheme {name!r}")
        return _SCHEMES[name]

    @property
    def mode(self) -> str:
        mode = self.raw.get("mode", ScoreMode.SUM_LOGIT)
        if mode not in ScoreMode.ALL:
            raise ConfigError(f"unknown score mode {mode!r}")
        return mode

    @property
    def eval_metric(self) -> str:
        name = self.raw.get("eval_metric", "accuracy")
        if name not in evaluation.METRICS:
            raise ConfigError(f"unknown eval metric {name!r}")
        return name

    @property
    def positive_class(self) -> int:
        value = self.raw.get("positive_class", 1)
        if value not in (0, 1):
            raise ConfigError("config key 'positive_class' must be 0 or 1")
        return value

    @property
    def parallel(self) -> int:
        value = self.raw.get("parallel", 4)
        if not isinstance(value, int) or value < 1:
            raise ConfigError("config key 'parallel' must be an integer >= 1")
        return value

    def label_specs(self) -> tuple[LabelSpec, ...]:
        classes = self.raw.get("classes")
        if classes is None:
            return ()  # multiple-choice datasets carry per-record choices
        if not isinstance(classes, list) or not classes:
            raise ConfigError("config key 'classes' must be a non-empty list")
        specs = []
        for i, cls in enumerate(classes):
            if not isinstance(cls, dict) or not isinstance(cls.get("name"), str):
                raise ConfigError(f"classes[{i}] needs a string 'name'")
            keywords = cls.get("keywords")
            if (
                not isinstance(keywords, list)
                or not keywords
                or any(not isinstance(kw, str) or not kw for kw in keywords)
            ):
                raise ConfigError(f"classes[{i}] needs non-empty string 'keywords'")
            specs.append(LabelSpec(cls["name"], tuple(keywords)))
        return tuple(specs)

    def template(self):
        source = self.raw.get("template")
        if not isinstance(source, str):
            raise ConfigError("config key 'template' must be a template string")
        return parse_template(source)


def load_config(path: str, overrides: dict) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    for key, value in overrides.items():
        if value is not None:
            raw[key] = value
    return RunConfig(raw, base_dir=os.path.dirname(os.path.abspath(path)))


def _load_subwords(path: str | None) -> dict | None:
    if path is None:
        return None
    table = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                table[obj["keyword"]] = [int(t) for t in obj["token_ids"]]
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: malformed subword line ({exc})") from exc
    return table


def _load_embedding_space(config: RunConfig, vocabulary):
    """The matrix the verbalizer searches: static input embeddings, or the
    whitened contextual states when the whitening path is configured."""
    whitening = config.raw.get("whitening")
    if whitening is not None:
        if not isinstance(whitening, dict) or "contextual" not in whitening:
            raise ConfigError("config key 'whitening' must be {\"contextual\": path}")
        sub = RunConfig(whitening, config.base_dir)
        contextual = read_tensor(sub.path("contextual", required=True))
        if contextual.shape[0] != len(vocabulary):
            raise DataError(
                f"contextual matrix has {contextual.shape[0]} rows for "
                f"{len(vocabulary)} vocabulary tokens"
            )
        transform = fit_whitening(contextual)
        return whiten(contextual, transform)
    emb = read_tensor(config.path("embeddings", required=True))
    if emb.shape[0] != len(vocabulary):
        raise DataError(
            f"embedding matrix has {emb.shape[0]} rows for {len(vocabulary)} vocabulary tokens"
        )
    return np.asarray(emb, dtype=np.float64)


def _build_backend(config: RunConfig, vocab_size: int, logits_key="logits", manifest_key="manifest"):
    url = config.raw.get("backend_url")
    has_file = config.raw.get(logits_key) is not None or config.raw.get(manifest_key) is not None
    if url is not None and has_file:
        raise ConfigError("configure exactly one backend: logits+manifest or backend_url")
    if url is not None:
        if not isinstance(url, str) or not url:
            raise ConfigError("config key 'backend_url' must be a URL string")
        timeout = config.raw.get("timeout", 60.0)
        retries = config.raw.get("retries", 0)
        return HTTPBackend(url, vocab_size, timeout=timeout,
                           max_in_flight=config.parallel, retries=retries)
    if not has_file:
        raise ConfigError("no backend configured: set logits+manifest or backend_url")
    batch = read_logits_batch(
        config.path(logits_key, required=True),
        config.path(manifest_key, required=True),
        vocab_size=vocab_size,
    )
    return FileBackend(batch, vocab_size)


def _build_pipeline(config: RunConfig, template=None, backend=None) -> evaluation.Pipeline:
    manifest = config.path("export_manifest")
    if manifest is not None:
        tensorio.verify_export_manifest(manifest)
    vocabulary = read_vocab(config.path("vocab", required=True))
    embeddings = _load_embedding_space(config, vocabulary)
    subwords = _load_subwords(config.path("subwords"))
    return evaluation.Pipeline(
        vocabulary=vocabulary,
        embeddings=embeddings,
        label_specs=config.label_specs(),
        template=template if template is not None else config.template(),
        backend=backend if backend is not None else _build_backend(config, len(vocabulary)),
        k=config.k,
        metric=config.metric,
        scheme=config.scheme,
        mode=config.mode,
        subwords=subwords,
        parallel=config.parallel,
    )


def _config_echo(config: RunConfig) -> dict:
    return json.loads(json.dumps(config.raw, sort_keys=True))


# --- commands ----------------------------------------------------------------

def cmd_neighbors(config: RunConfig, keyword: str, k: int | None) -> int:
    """Print a keyword's top-k neighbor table (rank, verbatim token, similarity)."""
    manifest = config.path("export_manifest")
    if manifest is not None:
        tensorio.verify_export_manifest(manifest)
    vocabulary = read_vocab(config.path("vocab", required=True))
    embeddings = _load_embedding_space(config, vocabulary)
    subwords = _load_subwords(config.path("subwords"))
    k = k if k is not None else config.k
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    label_vec = embed_label(keyword, vocabulary, embeddings, subwords)
    neighbors = topk_neighbors(label_vec, embeddings, k, config.metric, vocabulary)
    print(f'keyword "{keyword}" ({config.metric.value}, k={k})')
    print(f"{'rank':>4}  {'sim':>5}  token")
    for rank, (token_id, sim) in enumerate(neighbors, start=1):
        print(f'{rank:>4}  {sim:>5.2f}  "{vocabulary.tokens[token_id]}"')
    return 0


def cmd_classify(config: RunConfig, out_path: str) -> int:
    """Classify every dataset record and dump predictions as JSON Lines."""
    pipeline = _build_pipeline(config)
    records = read_dataset(config.path("dataset", required=True))
    if not records:
        logger.warning("dataset is empty; writing an empty prediction dump")
        with open(out_path, "wb") as fh:
            fh.write(b"")
        return 0
    results = evaluation.run_predictions(records, pipeline)
    with open(out_path, "wb") as fh:
        fh.write(evaluation.predictions_jsonl(records, results))
    logger.info("wrote %d predictions to %s", len(results), out_path)
    return 0


def _template_runs(config: RunConfig):
    """Multi-template evaluation entries: [{template[, logits, manifest]}].

    With the file backend each template needs its own exported logits; with
    backend_url the prompts are just rendered per template.
    """
    runs = config.raw.get("template_runs")
    if runs is None:
        return None
    if not isinstance(runs, list) or not runs:
        raise ConfigError("config key 'template_runs' must be a non-empty list")
    http = config.raw.get("backend_url") is not None
    parsed = []
    for i, run in enumerate(runs):
        if not isinstance(run, dict) or not isinstance(run.get("template"), str):
            raise ConfigError(f"template_runs[{i}] needs a 'template' string")
        if not http and (run.get("logits") is None or run.get("manifest") is None):
            raise ConfigError(
                f"template_runs[{i}]: file backend needs per-template 'logits' and 'manifest'"
            )
        parsed.append(run)
    return parsed


def cmd_eval(config: RunConfig, out_dir: str) -> int:
    """Evaluate on a labeled dataset; write report.json/report.txt plus the
    per-example prediction dump into out_dir."""
    runs = _template_runs(config)
    records = read_dataset(config.path("dataset", required=True))
    echo = _config_echo(config)

    if runs is None:
        pipeline = _build_pipeline(config)
        report, results = evaluation.evaluate(
            records, pipeline, config.eval_metric, config.positive_class, config_echo=echo,
        )
        payload = report.to_dict()
        outputs = {
            "report.json": (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode(),
            "report.txt": evaluation.report_text(
                report, [s.class_name for s in pipeline.label_specs]
            ).encode(),
            "predictions.jsonl": evaluation.predictions_jsonl(records, results),
        }
    else:
        vocabulary = read_vocab(config.path("vocab", required=True))
        embeddings = _load_embedding_space(config, vocabulary)
        subwords = _load_subwords(config.path("subwords"))
        per_template = []
        outputs = {}
        for i, run in enumerate(runs):
            # With the file backend each run names its own logits; with a
            # scoring service one backend serves every rendered template.
            sub = RunConfig({**config.raw, **run}, config.base_dir)
            pipeline = evaluation.Pipeline(
                vocabulary=vocabulary,
                embeddings=embeddings,
                label_specs=config.label_specs(),
                template=parse_template(run["template"]),
                backend=_build_backend(sub, len(vocabulary)),
                k=config.k,
                metric=config.metric,
                scheme=config.scheme,
                mode=config.mode,
                subwords=subwords,
                parallel=config.parallel,
            )
            report, results = evaluation.evaluate(
                records, pipeline, config.eval_metric, config.positive_class,
                config_echo={"template": run["template"]},
            )
            per_template.append(report)
            outputs[f"predictions_{i}.jsonl"] = evaluation.predictions_jsonl(records, results)
        summary = evaluation.summarize_template_runs(
            [r.metric_value for r in per_template]
        )
        payload = {
            "config_echo": echo,
            "metric_name": config.eval_metric,
            "template_summary": summary,
            "runs": [r.to_dict() for r in per_template],
        }
        text = (
            f"templates: {summary['n_templates']}\n"
            f"metric   : {config.eval_metric} mean={summary['mean']:.6f} "
            f"stderr={summary['stderr']:.6f}\n"
        )
        outputs["report.json"] = (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode()
        outputs["report.txt"] = text.encode()

    os.makedirs(out_dir, exist_ok=True)
    for name, blob in outputs.items():
        with open(os.path.join(out_dir, name), "wb") as fh:
            fh.write(blob)
    logger.info("wrote evaluation report to %s", out_dir)
    return 0


def cmd_sweep(config: RunConfig, k_min: int, k_max: int, out_path: str) -> int:
    """Evaluate over k in [k_min, k_max] and write a CSV of (k, metric)."""
    if k_min < 1 or k_min > k_max:
        raise ConfigError(f"invalid sweep range [{k_min}, {k_max}]")
    pipeline = _build_pipeline(config)
    records = read_dataset(config.path("dataset", required=True))
    rows = evaluation.sweep_k(
        records, pipeline, range(k_min, k_max + 1),
        config.eval_metric, config.positive_class,
    )
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(evaluation.sweep_csv(rows))
    logger.info("wrote sweep table to %s", out_path)
    return 0


def cmd_whiten_fit(config: RunConfig, out_dir: str) -> int:
    """Fit the whitening transform on the configured contextual tensor and
    write mean.npt, transform.npt and the whitened matrix."""
    whitening = config.raw.get("whitening")
    if not isinstance(whitening, dict) or "contextual" not in whitening:
        raise ConfigError("whiten-fit needs config key 'whitening': {\"contextual\": path}")
    sub = RunConfig(whitening, config.base_dir)
    contextual = read_tensor(sub.path("contextual", required=True))
    transform = fit_whitening(contextual)
    whitened = whiten(contextual, transform)
    os.makedirs(out_dir, exist_ok=True)
    tensorio.write_tensor(os.path.join(out_dir, "mean.npt"), transform.mean)
    tensorio.write_tensor(os.path.join(out_dir, "transform.npt"), transform.transform)
    tensorio.write_tensor(os.path.join(out_dir, "whitened.npt"), whitened)
    logger.info("wrote whitening artifacts to %s", out_dir)
    return 0


# --- entry point ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="npprompt",
        description="Zero-shot classification with k-NN verbalizers over exported embeddings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--k", type=int, help="override neighborhood size")
        p.add_argument("--metric", choices=sorted(_METRICS), help="override similarity metric")
        p.add_argument("--weights", choices=sorted(_SCHEMES), help="override weight scheme")
        p.add_argument("--mode", choices=ScoreMode.ALL, help="override score mode")
        p.add_argument("--parallel", type=int, help="override backend parallelism")
        p.add_argument("--backend-url", dest="backend_url", help="override scoring service URL")

    p = sub.add_parser("neighbors", help="print a keyword's top-k neighbor table")
    common(p)
    p.add_argument("keyword")

    p = sub.add_parser("classify", help="classify a dataset and dump predictions")
    common(p)
    p.add_argument("--out", required=True, help="prediction dump path (.jsonl)")

    p = sub.add_parser("eval", help="evaluate on a labeled dataset")
    common(p)
    p.add_argument("--out", required=True, help="output directory for report files")

    p = sub.add_parser("sweep", help="evaluate across a range of neighborhood sizes")
    common(p)
    p.add_argument("--k-min", type=int, required=True)
    p.add_argument("--k-max", type=int, required=True)
    p.add_argument("--out", required=True, help="output CSV path")

    p = sub.add_parser("whiten-fit", help="fit the whitening transform")
    common(p)
    p.add_argument("--out", required=True, help="output directory for transform tensors")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("NPPROMPT_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    overrides = {
        "k": getattr(args, "k", None),
        "metric": getattr(args, "metric", None),
        "weights": getattr(args, "weights", None),
        "mode": getattr(args, "mode", None),
        "parallel": getattr(args, "parallel", None),
        "backend_url": getattr(args, "backend_url", None),
    }
    try:
        config = load_config(args.config, overrides)
        if args.command == "neighbors":
            return cmd_neighbors(config, args.keyword, args.k)
        if args.command == "classify":
            return cmd_classify(config, args.out)
        if args.command == "eval":
            return cmd_eval(config, args.out)
        if args.command == "sweep":
            return cmd_sweep(config, args.k_min, args.k_max, args.out)
        if args.command == "whiten-fit":
            return cmd_whiten_fit(config, args.out)
        raise ConfigError(f"unknown command {args.command!r}")
    except NPPromptError as exc:
        print(f"npprompt {args.command}: error: {exc}", file=sys.stderr)
        return getattr(exc, "exit_code", 2)


if __name__ == "__main__":
    sys.exit(main())

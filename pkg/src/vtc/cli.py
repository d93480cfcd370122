"""``vtc`` command line: datagen, train, eval, predict.

Exit codes: 0 success, 2 configuration error, 3 I/O or format error,
4 contract error (bad data, incompatible checkpoint).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .baselines import oracle_predictions, random_predictions
from .config import RunConfig, add_config_flags, build_config
from .estimator import VisualTextCorrector
from .exceptions import ConfigError, ContractError, FormatError, VTCError
from .forge import FeatureStore, SyntheticConfig, VtcSample, generate_synthetic, make_splits, read_corpus, read_sentences, write_jsonl
from .metrics import SampleTruth, multi_k_report
from .validation import check_k, check_samples

logger = logging.getLogger("vtc")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_CONTRACT = 0, 2, 3, 4


def _corpus_file(path: str, split: str) -> Path:
    p = Path(path)
    return p / f"{split}.jsonl" if p.is_dir() else p


def _default_features(cfg: RunConfig) -> str | None:
    if cfg.features:
        return cfg.features
    if cfg.corpus and Path(cfg.corpus).is_dir() and (Path(cfg.corpus) / "features.vtcf").exists():
        return str(Path(cfg.corpus) / "features.vtcf")
    return None


def _load_features(cfg: RunConfig, needed: bool) -> FeatureStore | None:
    path = _default_features(cfg)
    if path is None:
        if needed:
            raise ConfigError("this model uses video features; pass --features")
        return None
    return FeatureStore.load(path)


# ---------------------------------------------------------------------------- datagen


def cmd_datagen(cfg: RunConfig) -> dict:
    cfg.require("seed", "out")
    k = "1" if cfg.k is None else cfg.k
    k = k if k == "all" else int(k)
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise FormatError(f"cannot create {out}: {exc}") from exc
    if cfg.source:
        sentences = read_sentences(cfg.source)
        store = FeatureStore.load(cfg.features) if cfg.features else None
    else:
        syn = SyntheticConfig(
            n_sentences=cfg.n_sentences, n_scenes=cfg.n_scenes, activities_per_scene=cfg.activities_per_scene,
            d_v=cfg.d_v, noise=cfg.noise, activity_skew=cfg.activity_skew,
        )
        sentences, store = generate_synthetic(np.random.default_rng(cfg.seed), syn)
    splits = make_splits(sentences, cfg.strategy, k, cfg.seed)
    write_jsonl(out / "sentences.jsonl", sentences)
    for name, samples in splits.items():
        write_jsonl(out / f"{name}.jsonl", samples)
    if store is not None:
        store.save(out / "features.vtcf")
    summary = {name: len(samples) for name, samples in splits.items()}
    print(json.dumps({"out": str(out), "samples": summary}, sort_keys=True))
    return summary


# ---------------------------------------------------------------------------- train


def cmd_train(cfg: RunConfig) -> VisualTextCorrector:
    cfg.require("seed", "corpus", "checkpoint")
    train = read_corpus(_corpus_file(cfg.corpus, "train"))
    val_path = cfg.val_corpus or (str(_corpus_file(cfg.corpus, "val")) if Path(cfg.corpus).is_dir() else None)
    val = read_corpus(val_path) if val_path else None
    features = _load_features(cfg, cfg.visual != "none")
    est = VisualTextCorrector(**cfg.estimator_params())
    est.fit(train, features=features, validation=val or None)
    est.save(cfg.checkpoint)
    history = [{k: v for k, v in h.items() if k != "seconds"} for h in est.history_]
    if cfg.log:
        with open(cfg.log, "w", encoding="utf-8") as fh:
            for h in history:
                fh.write(json.dumps(h, sort_keys=True) + "\n")
    for h in history:
        line = f"epoch {h['epoch']:4d}  l {h['loss']:.4f}  l_d {h['l_d']:.4f}  l_f {h['l_f']:.4f}"
        if "val_detection" in h:
            line += f"  val-det {100 * h['val_detection']:.1f}  val-cor {100 * h['val_correction']:.1f}"
        print(line)
    print(f"wrote {cfg.checkpoint}")
    return est


# ---------------------------------------------------------------------------- eval


def cmd_eval(cfg: RunConfig, oracle: bool = False, random_scores: bool = False):
    cfg.require("corpus")
    samples = check_samples(read_corpus(_corpus_file(cfg.corpus, "test")))
    k = "auto" if cfg.k is None else cfg.k
    if oracle or random_scores:
        if cfg.checkpoint:
            beta = VisualTextCorrector.load(cfg.checkpoint).beta_words_
        else:
            beta = sorted({c.original for s in samples for c in s.corruptions})
        ks = check_k(k, samples)
        if oracle:
            if any(kk != s.k for kk, s in zip(ks, samples)):
                raise ContractError("the oracle stub only answers with each sample's own k")
            preds = oracle_predictions(samples, beta)
        else:
            rng = np.random.default_rng(0 if cfg.seed is None else cfg.seed)
            preds = [random_predictions([s], beta, rng, kk)[0] for s, kk in zip(samples, ks)]
        truths = [SampleTruth(s.positions[:kk], [c.original for c in s.corruptions][:kk]) for s, kk in zip(samples, ks)]
        report = multi_k_report(preds, truths, beta)
    else:
        cfg.require("checkpoint")
        est = VisualTextCorrector.load(cfg.checkpoint)
        features = _load_features(cfg, est.visual != "none")
        report = est.evaluate(samples, features, k=k)
    if cfg.report:
        try:
            Path(cfg.report).write_text(report.dumps() + "\n")
        except OSError as exc:
            raise FormatError(f"cannot write report {cfg.report}: {exc}") from exc
    print(report.format_table())
    return report


# ---------------------------------------------------------------------------- predict


def cmd_predict(cfg: RunConfig, sentence: str, feature_id: str | None = None, as_json: bool = False) -> list[dict]:
    cfg.require("checkpoint")
    est = VisualTextCorrector.load(cfg.checkpoint)
    tokens = sentence.lower().split()
    if not tokens:
        raise ContractError("empty sentence")
    features = None
    if est.visual == "none":
        if feature_id:
            logger.warning("text-only checkpoint: ignoring feature id %r", feature_id)
        feature_id = ""
    else:
        if not feature_id:
            raise ConfigError("this checkpoint uses video features; pass --feature_id")
        features = _load_features(cfg, True)
    sample = VtcSample(tokens, ["UNK"] * len(tokens), [], feature_id)
    k = 1 if cfg.k is None else cfg.k
    unknown = [i for i, t in enumerate(tokens) if t not in est.vocab_]
    rows = [
        {"position": t, "word": tokens[t], "replacement": w, "score": s, "unk": t in unknown}
        for t, w, s in est.predict([sample], features, k=k)[0]
    ]
    if as_json:
        print(json.dumps({"tokens": tokens, "unk_positions": unknown, "predictions": rows}, sort_keys=True))
    else:
        for r in rows:
            flag = "  [UNK]" if r["unk"] else ""
            print(f"{r['position']}\t{r['word']} -> {r['replacement']}\t{r['score']:.4f}{flag}")
    return rows


# ---------------------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vtc", description="Visual text correction: detect and replace the inaccurate word.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "datagen": "generate a synthetic corpus (or corrupt --source) into train/val/test JSONL",
        "train": "train a model and write a checkpoint",
        "eval": "evaluate a checkpoint on a corpus",
        "predict": "correct one sentence",
    }
    parsers = {name: sub.add_parser(name, help=text) for name, text in helps.items()}
    for p in parsers.values():
        add_config_flags(p)
    parsers["eval"].add_argument("--oracle", action="store_true", help="debug: score the ground truth instead of a model")
    parsers["eval"].add_argument("--random_scores", action="store_true", help="debug: uniform random predictions")
    parsers["predict"].add_argument("--sentence", required=True)
    parsers["predict"].add_argument("--feature_id")
    parsers["predict"].add_argument("--json", action="store_true")
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = build_config(args)
        with threadpool_limits(1):
            if args.command == "datagen":
                cmd_datagen(cfg)
            elif args.command == "train":
                cmd_train(cfg)
            elif args.command == "eval":
                cmd_eval(cfg, args.oracle, args.random_scores)
            else:
                cmd_predict(cfg, args.sentence, args.feature_id, args.json)
    except ConfigError as exc:
        print(f"vtc: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FormatError, OSError) as exc:
        print(f"vtc: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ContractError as exc:
        print(f"vtc: contract error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except VTCError as exc:
        print(f"vtc: error: {exc}", file=sys.stderr)
        return exc.exit_code
    return EXIT_OK


def main() -> None:
    sys.exit(run())

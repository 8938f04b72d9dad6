"""Single entry-point command with batch subcommands.

    argsum ingest    raw dump -> clean corpus + rejection report + stats
    argsum encode    clean corpus -> variant splits + seq2seq files
    argsum extract   clean corpus -> extracted conclusions JSONL
    argsum evaluate  candidates vs references -> metric report
    argsum agree     annotation JSONL -> agreement report

Every flag can be preset through an environment variable named
ARGSUM_<FLAG> (dashes as underscores, uppercase); explicit flags win.
Exit codes: 0 success, 2 input/schema errors, 3 external-service errors.
A run manifest is written next to every output artifact.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from . import __version__
from .encoding import (
    SplitSpec,
    build_variant,
    default_max_source_tokens,
    export_seq2seq,
    split_corpus,
    variant_drop_reason,
)
from .errors import ArgsumError, LengthMismatchError, ProviderUnreachableError, SchemaError
from .extraction import (
    ContextIndex,
    ExtractionParams,
    extract_conclusion,
    retrieve_context,
)
from .ingest import FilterConfig, corpus_stats, dedup_policy, ingest
from .knowledge import fallback_aspects, fallback_targets
from .metrics import (
    aggregate_agreement,
    aggregate_reports,
    lexical_bertscore,
    read_annotations,
    score_pair,
)
from .records import ArgConclusionRecord, CorpusVariant, SourceKind, read_records, write_records
from .remote import RemoteEmbedder, RemoteParaphraser
from .text import word_count

ENV_PREFIX = "ARGSUM_"
SCHEMA_VERSION = "1.0"

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SERVICE = 3


def _env_name(flag: str) -> str:
    return ENV_PREFIX + flag.lstrip("-").replace("-", "_").upper()


def _env_default(flag: str, fallback, cast=str):
    raw = os.environ.get(_env_name(flag))
    if raw is None:
        return fallback
    if cast is bool:
        return raw.lower() in ("1", "true", "yes", "on")
    return cast(raw)


@dataclass
class RunManifest:
    """Reproducibility sidecar written next to each output artifact."""

    command: str
    config: dict
    inputs: list[str]
    outputs: list[str]
    seed: int | None = None
    started: str = ""
    finished: str = ""
    tool_version: str = __version__
    schema_version: str = SCHEMA_VERSION
    extra: dict = field(default_factory=dict)

    def write(self, path: Path) -> None:
        payload = {
            "command": self.command,
            "config": self.config,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "seed": self.seed,
            "started": self.started,
            "finished": self.finished,
            "tool_version": self.tool_version,
            "schema_version": self.schema_version,
            **self.extra,
        }
        _write_json_atomic(payload, path)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write_json_atomic(payload: dict, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, ensure_ascii=False, indent=2)
            fh.write("\n")
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def _manifest_path(anchor: Path) -> Path:
    if anchor.is_dir():
        return anchor / "manifest.json"
    return anchor.with_name(anchor.name + ".manifest.json")


def _add_common_filter_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--min-text-words", type=int, default=_env_default("min-text-words", 11, int)
    )
    parser.add_argument(
        "--min-conclusion-words",
        type=int,
        default=_env_default("min-conclusion-words", 3, int),
    )
    parser.add_argument(
        "--no-cmv-tag",
        action="store_true",
        default=_env_default("no-cmv-tag", False, bool),
        help="do not require the CMV tag in post titles",
    )
    parser.add_argument(
        "--keep-con-stance",
        action="store_true",
        default=_env_default("keep-con-stance", False, bool),
    )
    parser.add_argument(
        "--keep-conclusion-equals-topic",
        action="store_true",
        default=_env_default("keep-conclusion-equals-topic", False, bool),
    )
    parser.add_argument(
        "--keep-text-shorter-than-conclusion",
        action="store_true",
        default=_env_default("keep-text-shorter-than-conclusion", False, bool),
    )
    parser.add_argument(
        "--excluded-portals",
        default=_env_default("excluded-portals", "debate.org"),
        help="comma-separated portal names to drop wholesale",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="argsum",
        description="Argument-conclusion corpus construction, encoding, extraction, and evaluation.",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"argsum {__version__} (schema {SCHEMA_VERSION})",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_ingest = sub.add_parser("ingest", help="filter a raw dump into a clean corpus")
    p_ingest.add_argument("--source", required=True, choices=[s.value for s in SourceKind])
    p_ingest.add_argument("--in", dest="input", required=True)
    p_ingest.add_argument("--out", required=True)
    p_ingest.add_argument(
        "--rejected-out", default=None, help="rejection report path (default: <out>.rejected.jsonl)"
    )
    p_ingest.add_argument(
        "--stats-out", default=None, help="statistics path (default: <out>.stats.json)"
    )
    p_ingest.add_argument(
        "--no-dedup",
        action="store_true",
        default=_env_default("no-dedup", False, bool),
        help="keep exact text+conclusion duplicates",
    )
    p_ingest.add_argument(
        "--fallback-knowledge",
        action="store_true",
        default=_env_default("fallback-knowledge", False, bool),
        help="fill empty targets/aspects with the heuristic extractors",
    )
    _add_common_filter_flags(p_ingest)

    p_encode = sub.add_parser("encode", help="build a variant, split it, export seq2seq files")
    p_encode.add_argument("--in", dest="input", required=True)
    p_encode.add_argument(
        "--variant", required=True, choices=[v.value for v in CorpusVariant]
    )
    p_encode.add_argument("--out-dir", required=True)
    p_encode.add_argument("--seed", type=int, default=_env_default("seed", 5153, int))
    p_encode.add_argument(
        "--test-count", type=int, default=_env_default("test-count", 1000, int)
    )
    p_encode.add_argument(
        "--valid-fraction", type=float, default=_env_default("valid-fraction", 0.1, float)
    )
    p_encode.add_argument(
        "--max-source-tokens",
        type=int,
        default=_env_default("max-source-tokens", 0, int),
        help="word-level truncation limit (0 = per-variant default: 512 plain, 750 knowledge)",
    )

    p_extract = sub.add_parser("extract", help="generate extractive conclusions")
    p_extract.add_argument("--corpus", required=True)
    p_extract.add_argument("--out", required=True)
    p_extract.add_argument(
        "--context-k", type=int, default=_env_default("context-k", 10, int)
    )
    p_extract.add_argument(
        "--min-words",
        type=int,
        default=_env_default("min-words", 0, int),
        help="skip input texts with fewer words (e.g. 100 for forum comments)",
    )
    p_extract.add_argument(
        "--embedder",
        choices=["lexical", "remote"],
        default=_env_default("embedder", "lexical"),
    )
    p_extract.add_argument(
        "--endpoint", default=_env_default("endpoint", "http://localhost:8900")
    )
    p_extract.add_argument(
        "--paraphrase", choices=["on", "off"], default=_env_default("paraphrase", "off")
    )
    p_extract.add_argument(
        "--fallback",
        choices=["on", "off"],
        default=_env_default("fallback", "on"),
        help="fall back to identity paraphrase / fail hard when the service is down",
    )
    p_extract.add_argument("--damping", type=float, default=_env_default("damping", 0.85, float))

    p_eval = sub.add_parser("evaluate", help="score candidate conclusions against references")
    p_eval.add_argument("--candidates", required=True)
    p_eval.add_argument("--references", required=True)
    p_eval.add_argument(
        "--texts", default=None, help="optional argumentative texts for novelty (line-aligned)"
    )
    p_eval.add_argument(
        "--metrics",
        default=_env_default("metrics", "rouge,novelty"),
        help="comma list out of: rouge, novelty, bertscore",
    )
    p_eval.add_argument(
        "--bertscore-baseline",
        type=float,
        default=_env_default("bertscore-baseline", None, float),
        help="optional rescaling baseline b: reported score is (x-b)/(1-b)",
    )
    p_eval.add_argument("--out", required=True)

    p_agree = sub.add_parser("agree", help="two-annotator agreement report")
    p_agree.add_argument("--annotations", required=True)
    p_agree.add_argument("--out", required=True)

    return parser


def _filter_config(args: argparse.Namespace) -> FilterConfig:
    portals = tuple(p.strip() for p in str(args.excluded_portals).split(",") if p.strip())
    return FilterConfig(
        min_text_words=args.min_text_words,
        min_conclusion_words=args.min_conclusion_words,
        require_cmv_tag=not args.no_cmv_tag,
        drop_con_stance=not args.keep_con_stance,
        drop_conclusion_equals_topic=not args.keep_conclusion_equals_topic,
        drop_text_shorter_than_conclusion=not args.keep_text_shorter_than_conclusion,
        excluded_portals=portals,
    )


def _cmd_ingest(args: argparse.Namespace) -> int:
    started = _now()
    config = _filter_config(args)
    source = SourceKind(args.source)
    kept, rejected = ingest(args.input, source, config)
    n_input = len(kept) + len(rejected)
    duplicates_removed = 0
    if not args.no_dedup:
        deduped = dedup_policy(kept)
        duplicates_removed = len(kept) - len(deduped)
        kept = deduped
    if args.fallback_knowledge:
        kept = [
            r.with_knowledge(
                targets=r.targets or fallback_targets(r.text),
                aspects=r.aspects or fallback_aspects(r.text),
            )
            for r in kept
        ]

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    rejected_out = Path(args.rejected_out or f"{out}.rejected.jsonl")
    stats_out = Path(args.stats_out or f"{out}.stats.json")
    write_records(kept, out)
    with open(rejected_out, "w", encoding="utf-8") as fh:
        for record, rule in rejected:
            fh.write(json.dumps({"id": record.id, "rule": rule}, ensure_ascii=False) + "\n")
    stats = corpus_stats(kept).to_json_dict() if kept else {"n_records": 0}
    _write_json_atomic(stats, stats_out)

    RunManifest(
        command="ingest",
        config={
            "source": source.value,
            **{k: getattr(config, k) if not isinstance(getattr(config, k), tuple) else list(getattr(config, k)) for k in (
                "min_text_words",
                "min_conclusion_words",
                "require_cmv_tag",
                "drop_con_stance",
                "drop_conclusion_equals_topic",
                "drop_text_shorter_than_conclusion",
                "excluded_portals",
            )},
            "dedup": not args.no_dedup,
            "fallback_knowledge": args.fallback_knowledge,
        },
        inputs=[str(args.input)],
        outputs=[str(out), str(rejected_out), str(stats_out)],
        started=started,
        finished=_now(),
        extra={
            "counts": {
                "input": n_input,
                "kept": len(kept),
                "rejected": len(rejected),
                "duplicates_removed": duplicates_removed,
            }
        },
    ).write(_manifest_path(out))
    print(f"kept {len(kept)} / rejected {len(rejected)} of {n_input} records -> {out}")
    return EXIT_OK


def _cmd_encode(args: argparse.Namespace) -> int:
    started = _now()
    records = read_records(args.input)
    variant = CorpusVariant(args.variant)
    dropped = [
        {"id": r.id, "reason": reason}
        for r in records
        if (reason := variant_drop_reason(r, variant)) is not None
    ]
    examples = build_variant(records, variant)
    spec = SplitSpec(
        train_fraction=1.0 - args.valid_fraction,
        valid_fraction=args.valid_fraction,
        test_count=args.test_count,
        seed=args.seed,
    )
    train, valid, test = split_corpus(examples, spec)
    max_tokens = args.max_source_tokens or default_max_source_tokens(variant)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    counts = {}
    for name, split in (("train", train), ("valid", valid), ("test", test)):
        src, tgt = export_seq2seq(split, out_dir / name, max_source_tokens=max_tokens)
        outputs += [str(src), str(tgt)]
        counts[name] = len(split)

    RunManifest(
        command="encode",
        config={
            "variant": variant.value,
            "test_count": spec.test_count,
            "valid_fraction": spec.valid_fraction,
            "max_source_tokens": max_tokens,
        },
        inputs=[str(args.input)],
        outputs=outputs,
        seed=spec.seed,
        started=started,
        finished=_now(),
        extra={"counts": counts, "dropped": dropped, "n_examples": len(examples)},
    ).write(_manifest_path(out_dir))
    print(
        f"variant {variant.value}: train {counts['train']} / valid {counts['valid']} / "
        f"test {counts['test']} (dropped {len(dropped)}) -> {out_dir}"
    )
    return EXIT_OK


def _read_extract_corpus(path: str) -> list[ArgConclusionRecord]:
    """Lenient reader for extraction input: conclusion may be absent.

    Extraction never looks at the conclusion field, so bare {"id","text"}
    rows (e.g. forum comments without ground truth) are accepted.
    """
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc.msg}", line=line_no) from exc
            if "text" not in obj:
                raise SchemaError("row lacks a text field", line=line_no)
            records.append(
                ArgConclusionRecord(
                    id=str(obj.get("id", line_no)),
                    source=SourceKind(obj.get("source", "cmv_comment")),
                    text=obj["text"],
                    conclusion=obj.get("conclusion", ""),
                    topic=obj.get("topic"),
                    targets=tuple(obj.get("targets", ())),
                    aspects=tuple(obj.get("aspects", ())),
                )
            )
    return records


def _cmd_extract(args: argparse.Namespace) -> int:
    started = _now()
    records = _read_extract_corpus(args.corpus)
    n_input = len(records)
    if args.min_words:
        records = [r for r in records if word_count(r.text) >= args.min_words]
    if args.embedder == "remote":
        embedder = RemoteEmbedder(args.endpoint)
        embedder.health()  # fail fast with provider_unreachable
    else:
        embedder = None  # extract_conclusion defaults to the lexical embedder
    paraphraser = None
    if args.paraphrase == "on" and args.embedder == "remote":
        paraphraser = RemoteParaphraser(args.endpoint)
    index = ContextIndex().build(records)
    params = ExtractionParams(damping=args.damping)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    rows = []
    for record in records:
        context = retrieve_context(record, index, args.context_k)
        result = extract_conclusion(
            record,
            context,
            embedder=embedder,
            params=params,
            paraphraser=paraphraser,
            apply_paraphrase=args.paraphrase == "on",
        )
        if args.paraphrase == "on" and result.paraphrase_fallback and args.fallback == "off":
            raise ProviderUnreachableError("paraphrase required but no provider configured")
        row = {
            "id": record.id,
            "conclusion": result.conclusion_sentence,
            "score": result.score,
        }
        if result.paraphrased is not None:
            row["paraphrased"] = result.paraphrased
            row["paraphrase_fallback"] = result.paraphrase_fallback
        rows.append(row)
    with open(out, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")

    RunManifest(
        command="extract",
        config={
            "context_k": args.context_k,
            "min_words": args.min_words,
            "embedder": args.embedder,
            "endpoint": args.endpoint if args.embedder == "remote" else None,
            "paraphrase": args.paraphrase,
            "damping": args.damping,
        },
        inputs=[str(args.corpus)],
        outputs=[str(out)],
        started=started,
        finished=_now(),
        extra={"counts": {"input": n_input, "records": len(rows)}},
    ).write(_manifest_path(out))
    print(f"extracted {len(rows)} conclusions -> {out}")
    return EXIT_OK


def _read_lines(path: str) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh]


def _cmd_evaluate(args: argparse.Namespace) -> int:
    started = _now()
    candidates = _read_lines(args.candidates)
    references = _read_lines(args.references)
    if len(candidates) != len(references):
        raise LengthMismatchError(
            f"{len(candidates)} candidates vs {len(references)} references"
        )
    texts = None
    if args.texts:
        texts = _read_lines(args.texts)
        if len(texts) != len(candidates):
            raise LengthMismatchError(f"{len(texts)} texts vs {len(candidates)} candidates")
    wanted = {m.strip() for m in args.metrics.split(",") if m.strip()}
    unknown = wanted - {"rouge", "novelty", "bertscore"}
    if unknown:
        raise SchemaError(f"unknown metrics: {sorted(unknown)}")

    reports = []
    for i, (candidate, reference) in enumerate(zip(candidates, references)):
        bert = (
            lexical_bertscore(candidate, reference, baseline=args.bertscore_baseline)
            if "bertscore" in wanted
            else None
        )
        reports.append(
            score_pair(
                candidate,
                reference,
                novelty_source=texts[i] if texts else None,
                bertscore=bert,
            )
        )

    payload = {
        "aggregate": aggregate_reports(reports),
        "pairs": [r.to_json_dict() for r in reports],
    }
    out = Path(args.out)
    _write_json_atomic(payload, out)
    RunManifest(
        command="evaluate",
        config={"metrics": sorted(wanted), "bertscore_baseline": args.bertscore_baseline},
        inputs=[str(args.candidates), str(args.references)] + ([str(args.texts)] if args.texts else []),
        outputs=[str(out)],
        started=started,
        finished=_now(),
        extra={"counts": {"pairs": len(reports)}},
    ).write(_manifest_path(out))
    aggregate = payload["aggregate"]
    print(
        "n={n} rouge1_f={rouge1_f:.4f} rouge2_f={rouge2_f:.4f} rougeL_f={rougeL_f:.4f}".format(
            **{k: aggregate[k] for k in ("n", "rouge1_f", "rouge2_f", "rougeL_f")}
        )
    )
    return EXIT_OK


def _cmd_agree(args: argparse.Namespace) -> int:
    started = _now()
    labels_a, labels_b, groups = read_annotations(args.annotations)
    table = aggregate_agreement(labels_a, labels_b, groups)
    payload = {group: agreement.to_json_dict() for group, agreement in table.items()}
    out = Path(args.out)
    _write_json_atomic(payload, out)
    RunManifest(
        command="agree",
        config={},
        inputs=[str(args.annotations)],
        outputs=[str(out)],
        started=started,
        finished=_now(),
        extra={"counts": {"items": len(groups), "groups": len(table)}},
    ).write(_manifest_path(out))
    for group, agreement in payload.items():
        print(
            f"{group or '(all)'}: conclusion {agreement['conclusion_pct']:.1f}% "
            f"informative {agreement['informative_pct']:.1f}% over {agreement['n']} items"
        )
    return EXIT_OK


_HANDLERS = {
    "ingest": _cmd_ingest,
    "encode": _cmd_encode,
    "extract": _cmd_extract,
    "evaluate": _cmd_evaluate,
    "agree": _cmd_agree,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.subcommand](args)
    except ProviderUnreachableError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_SERVICE
    except ArgsumError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error [io_error]: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

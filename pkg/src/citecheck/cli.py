"""Command line entry points: synth | build-index | train | verify | evaluate | serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .pipeline import Pipeline, PipelineConfig, evaluate_results_file
from .service import AnnotationStore, build_review_items, create_app
from .synth import generate_corpus, write_dataset


def _add_config_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="path to a key = value config file")


def _load_config(args) -> PipelineConfig:
    path = Path(args.config)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    return PipelineConfig.from_file(path)


def cmd_synth(args) -> int:
    data = generate_corpus(
        seed=args.seed, n_claims=args.claims, n_failed=args.failed
    )
    doc_path, inst_path = write_dataset(args.out_dir, data)
    print(f"wrote {len(data.documents)} documents to {doc_path}")
    print(f"wrote {len(data.instances)} instances to {inst_path}")
    return 0


def cmd_build_index(args) -> int:
    config = _load_config(args)
    pipe = Pipeline.build(config)
    pipe.save_indexes()
    Path(config.checkpoint_dir).mkdir(parents=True, exist_ok=True)
    pipe.encoder.save(config.encoder_path)
    print(f"indexed {len(pipe.store)} passages from {len(pipe.store.documents)} documents")
    print(f"wrote {config.bm25_path} and {config.vectors_path}")
    return 0


def cmd_train(args) -> int:
    config = _load_config(args)
    pipe = Pipeline.build(config)
    summary = pipe.train()
    pipe.save_indexes()
    pipe.save_checkpoints()
    print(json.dumps(summary, indent=2))
    print(f"wrote {config.encoder_path} and {config.scorer_path}")
    return 0


def cmd_verify(args) -> int:
    config = _load_config(args)
    pipe = Pipeline.load(config)
    if pipe.scorer is None:
        print("error: no scorer checkpoint; run train first", file=sys.stderr)
        return 1
    if args.split == "all":
        instances = pipe.instances
    else:
        instances = pipe.instances_in(args.split)
    failures = 0
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for inst in instances:
            try:
                result = pipe.verify_instance(inst)
            except (KeyError, ValueError) as exc:
                failures += 1
                result = {"instance_id": inst.instance_id, "error": str(exc)}
            out.write(json.dumps(result, ensure_ascii=False) + "\n")
    finally:
        if args.out:
            out.close()
    if args.out:
        print(f"wrote {len(instances)} results to {args.out}")
    if failures:
        print(f"error: {failures} of {len(instances)} instances failed verification runs",
              file=sys.stderr)
        return 1
    return 0


def cmd_evaluate(args) -> int:
    report = evaluate_results_file(args.results)
    report.write_json(args.out)
    if args.curves_csv:
        report.write_curves_csv(args.curves_csv)
    for name, value in sorted(report.metrics.items()):
        print(f"{name} = {value:.4f}")
    print(f"wrote {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    config = _load_config(args)
    pipe = Pipeline.load(config)
    if pipe.scorer is None:
        print("error: no scorer checkpoint; run train first", file=sys.stderr)
        return 1
    items = build_review_items(pipe)
    store = AnnotationStore(config.annotations)
    app = create_app(items, store, seed=config.seed)
    print(f"serving {len(items)} claims on port {config.port}")
    uvicorn.run(app, host="127.0.0.1", port=config.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="citecheck",
        description="Citation verification: retrieval, reranking, failure flagging, review service",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a deterministic synthetic corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--claims", type=int, default=120)
    p.add_argument("--failed", type=int, default=20)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("build-index", help="build and save the sparse and dense indexes")
    _add_config_arg(p)
    p.set_defaults(func=cmd_build_index)

    p = sub.add_parser("train", help="train the dense encoder and the verifier, save checkpoints")
    _add_config_arg(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("verify", help="rank candidate citations for claims, one JSON per line")
    _add_config_arg(p)
    p.add_argument("--split", choices=["train", "dev", "test", "fail-dev", "fail-test", "all"], default="dev")
    p.add_argument("--out", default=None, help="output JSONL path (default: stdout)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("evaluate", help="compute metrics from a verify results file")
    p.add_argument("--results", required=True)
    p.add_argument("--out", required=True, help="metric report JSON path")
    p.add_argument("--curves-csv", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("serve", help="start the review HTTP service")
    _add_config_arg(p)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, ValueError, KeyError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())

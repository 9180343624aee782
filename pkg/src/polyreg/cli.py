"""Command-line surface tying the pipeline together.

Subcommands: gen-corpus, extract, build-dataset, train, eval, ablate,
audit, uncertainty-report.  All exit 0 on success and nonzero with a
diagnostic on any error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict

from . import corpus as corpus_mod
from .audit import audit as run_audit
from .audit import read_records
from .datasets import build_dataset, load_dataset, save_dataset, scan_dataset_for_leaks
from .harness import run_ablation, run_uncertainty_report, split_samples
from .metrics import evaluate
from .records import extract_corpus, load_extracted, save_extracted
from .registry import default_registry
from .trainer import TrainConfig, load_config, load_trained, save_trained, train


def _parse_synth_config(path, seed=None) -> corpus_mod.SynthConfig:
    """Read a key-value synthesis config; keys may carry a synth. prefix."""
    values: dict = {}
    if path:
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if not line or "=" not in line:
                    continue
                key, raw = (part.strip() for part in line.split("=", 1))
                if key.startswith("synth."):
                    key = key[len("synth."):]
                if key == "seed":
                    values["seed"] = int(raw)
                elif key == "n_docs":
                    values["n_docs"] = int(raw)
                elif key == "heads":
                    values["heads"] = tuple(int(x) for x in raw.split(",") if x.strip())
                elif key == "eta":
                    if ":" in raw:
                        values["eta"] = {
                            int(k): float(v)
                            for k, v in (pair.split(":") for pair in raw.split(","))
                        }
                    else:
                        values["eta"] = float(raw)
                elif key == "gamma":
                    values["gamma"] = float(raw)
                elif key == "tail_skew":
                    values["tail_skew"] = float(raw)
                elif key == "obs_prob":
                    values["obs_prob"] = float(raw)
    cfg = corpus_mod.SynthConfig(**values)
    if seed is not None:
        cfg.seed = seed
    return cfg


def _load_train_config(path, seed=None) -> TrainConfig:
    cfg = load_config(path) if path else TrainConfig()
    if seed is not None:
        cfg.seed = seed
    return cfg


def _footer(fh, digest: str) -> None:
    fh.write(f"# config_digest\t{digest}\n")


def cmd_gen_corpus(args) -> int:
    cfg = _parse_synth_config(args.config, args.seed)
    corpus = corpus_mod.gen_corpus(cfg)
    corpus_mod.write_corpus(corpus, args.output)
    print(f"wrote {len(corpus.documents)} documents to {args.output}")
    return 0


def cmd_extract(args) -> int:
    with open(args.docs, encoding="utf-8") as fh:
        text = fh.read()
    samples, counters = extract_corpus(text)
    save_extracted(samples, args.output)
    n_obs = sum(len(s.observations) for s in samples)
    print(
        f"extracted {n_obs} observations from {len(samples)} samples "
        f"(unmapped={counters.unmapped}, parse_failures={counters.parse_failures}, "
        f"incompatible_units={counters.incompatible_units})"
    )
    return 0


def cmd_build_dataset(args) -> int:
    samples = load_extracted(args.observations)
    instances = build_dataset(samples, args.variant)
    hits = scan_dataset_for_leaks(instances)
    if hits:
        print(f"error: leakage guard found {hits} surviving target values", file=sys.stderr)
        return 1
    save_dataset(instances, args.output)
    print(f"wrote {len(instances)} prompt instances ({args.variant}) to {args.output}")
    return 0


def cmd_train(args) -> int:
    cfg = _load_train_config(args.config, args.seed)
    instances = load_dataset(args.dataset)
    trained = train(cfg, instances)
    save_trained(trained, args.output)
    trace = ", ".join(f"{x:.4f}" for x in trained.loss_trace[-3:])
    print(f"trained {cfg.epochs} epochs; final losses [{trace}]; checkpoint {args.output}")
    return 0


def cmd_eval(args) -> int:
    trained = load_trained(args.checkpoint)
    instances = load_dataset(args.dataset)
    report = evaluate(trained, instances)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(report.to_table())
        _footer(fh, trained.config.digest())
    with open(args.output + ".json", "w", encoding="utf-8") as fh:
        fh.write(report.to_json() + "\n")
    macro = "NA" if report.macro_primary_r2 is None else f"{report.macro_primary_r2:.4f}"
    print(f"evaluated {len(report.heads)} heads; macro primary R2 = {macro}")
    return 0


def cmd_ablate(args) -> int:
    train_cfg = _load_train_config(args.config, args.seed)
    synth_cfg = _parse_synth_config(args.config, args.seed)
    report = run_ablation(train_cfg, synth_cfg)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(report.to_table())
        _footer(fh, train_cfg.digest())
    print(f"ablation mean delta = {report.mean_delta:.4f} over {len(report.rows)} heads")
    return 0


def cmd_audit(args) -> int:
    extracted = read_records(args.extracted)
    gold = read_records(args.gold)
    report = run_audit(extracted, gold)
    lines = ["metric\tvalue"] + [f"{k}\t{v:.6f}" for k, v in report.as_rows()]
    body = "\n".join(lines) + f"\nn\t{report.n}\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(body)
    print(f"strict precision {report.strict_precision:.3f} ({report.n} records)")
    return 0


def cmd_uncertainty_report(args) -> int:
    trained = load_trained(args.checkpoint)
    instances = load_dataset(args.dataset)
    report = run_uncertainty_report(trained, instances)
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(report.to_table())
        _footer(fh, trained.config.digest())
    sp = "NA" if report.spearman is None else f"{report.spearman:.4f}"
    print(f"uncertainty spearman = {sp}, calibration ratio = {report.calibration_ratio:.3f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polyreg")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, doc):
        p = sub.add_parser(name, help=doc)
        p.add_argument("--seed", type=int, default=None)
        p.set_defaults(fn=fn)
        return p

    p = add("gen-corpus", cmd_gen_corpus, "generate a synthetic corpus file")
    p.add_argument("--config", default=None)
    p.add_argument("-o", "--output", required=True)

    p = add("extract", cmd_extract, "extract observations from a corpus file")
    p.add_argument("docs")
    p.add_argument("-o", "--output", required=True)

    p = add("build-dataset", cmd_build_dataset, "build masked prompt datasets")
    p.add_argument("observations")
    p.add_argument("--variant", choices=("sample_synthesis", "sample_only"), default="sample_synthesis")
    p.add_argument("-o", "--output", required=True)

    p = add("train", cmd_train, "train a model on a prompt dataset")
    p.add_argument("dataset")
    p.add_argument("--config", default=None)
    p.add_argument("-o", "--output", required=True)

    p = add("eval", cmd_eval, "evaluate a checkpoint on a dataset")
    p.add_argument("checkpoint")
    p.add_argument("dataset")
    p.add_argument("-o", "--output", required=True)

    p = add("ablate", cmd_ablate, "run the matched synthesis ablation")
    p.add_argument("--config", default=None)
    p.add_argument("-o", "--output", required=True)

    p = add("audit", cmd_audit, "score extracted records against gold annotations")
    p.add_argument("extracted")
    p.add_argument("gold")
    p.add_argument("-o", "--output", default=None)

    p = add("uncertainty-report", cmd_uncertainty_report, "task-level uncertainty vs error")
    p.add_argument("checkpoint")
    p.add_argument("dataset")
    p.add_argument("-o", "--output", required=True)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except Exception as exc:  # surface a diagnostic, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

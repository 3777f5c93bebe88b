"""Command-line entry point: normalize, train-lm, decode, evaluate, tune, stats.

Every subcommand is a thin composition of library operations.  Exit codes:
0 on success, 1 on usage errors, 2 on data/format errors.  Output files
contain no timestamps, so identical invocations are byte-identical.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from . import corpus, metrics, ngram_lm, textnorm, tuner
from .decoder import DecoderParams, batch_decode
from .errors import ToolkitError

__all__ = ["main", "build_parser"]

JOBS_ENV_VAR = "CTC_FUSE_JOBS"


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; this tool reserves 2 for
    # data errors.
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_norm_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="normalization config file (flat key = value)")
    parser.add_argument(
        "--hesitation", choices=["triple", "single", "shared"], help="hesitation rewrite strategy"
    )
    parser.add_argument("--shared-symbol", help="symbol for the shared hesitation strategy")
    parser.add_argument("--min-duration", type=float, help="minimum clip length in seconds")
    parser.add_argument("--alphabet", help="allowed characters (space is always included)")
    parser.add_argument("--keep-digits", action="store_true", help="do not drop digit-bearing records")
    parser.add_argument("--keep-spelled", action="store_true", help="do not drop spelled-out words")


def _norm_config(args: argparse.Namespace) -> textnorm.NormalizationConfig:
    config = textnorm.load_config(args.config) if args.config else textnorm.NormalizationConfig()
    updates: dict = {}
    if args.hesitation:
        updates["hesitation_strategy"] = textnorm.HesitationStrategy(args.hesitation)
    if args.shared_symbol:
        updates["shared_symbol"] = args.shared_symbol
    if args.min_duration is not None:
        updates["min_duration_seconds"] = args.min_duration
    if args.alphabet:
        updates["alphabet"] = args.alphabet if " " in args.alphabet else args.alphabet + " "
    if args.keep_digits:
        updates["drop_digits"] = False
    if args.keep_spelled:
        updates["drop_spelled_words"] = False
    return replace(config, **updates) if updates else config


def _jobs(args: argparse.Namespace) -> int:
    if args.jobs is not None:
        return args.jobs
    env = os.environ.get(JOBS_ENV_VAR)
    if env:
        return int(env)
    return os.cpu_count() or 1


def _decoder_params(args: argparse.Namespace) -> DecoderParams:
    return DecoderParams(
        alpha=args.alpha,
        beta=args.beta,
        beam_width=args.beam_width,
        prune_log_floor=args.prune_log_floor,
        score_eos=not args.no_eos,
    )


def _emission_files(directory: str) -> list[str]:
    files = sorted(str(path) for path in Path(directory).glob("*.emis"))
    if not files:
        raise ToolkitError(f"no .emis files found in {directory}")
    return files


def _write_or_print(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _read_hypotheses(path: str) -> list[tuple[str, str]]:
    pairs: list[tuple[str, str]] = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            if "\t" not in line:
                raise ToolkitError(f"{path}:{line_no}: expected 'id<TAB>text'")
            utt_id, text = line.split("\t", 1)
            pairs.append((utt_id, text))
    return pairs


def _cmd_normalize(args: argparse.Namespace) -> int:
    config = _norm_config(args)
    manifest = corpus.load_manifest(args.manifest)
    kept, dropped = textnorm.normalize_corpus(manifest.records, config)
    corpus.save_manifest(corpus.Manifest(tuple(kept), manifest.source_name), args.out)
    report_path = args.drop_report or args.out + ".drops.tsv"
    with open(report_path, "w", encoding="utf-8") as handle:
        handle.write("id\treason\n")
        for utt_id, reason in dropped:
            handle.write(f"{utt_id}\t{reason.value}\n")
    print(f"kept {len(kept)} records, dropped {len(dropped)} (report: {report_path})")
    return 0


def _cmd_train_lm(args: argparse.Namespace) -> int:
    corpus_path = args.corpus
    if args.manifest or args.text_dir:
        config = _norm_config(args)
        manifests = [corpus.load_manifest(path) for path in args.manifest]
        corpus_path = corpus_path or args.out + ".corpus.txt"
        lines, words = corpus.build_lm_corpus(manifests, args.text_dir, config, corpus_path)
        print(f"assembled corpus: {lines} lines, {words} words -> {corpus_path}")
    elif not corpus_path:
        raise ToolkitError("train-lm needs --corpus, --manifest, or --text-dir")

    with open(corpus_path, encoding="utf-8") as handle:
        sentences = [line.split() for line in handle if line.strip()]
    if not sentences:
        raise ToolkitError(f"{corpus_path}: corpus is empty")
    model = ngram_lm.train_model(sentences, max_order=args.order, discount=args.discount)
    ngram_lm.write_arpa(model, args.out)
    sizes = ", ".join(f"{len(t)} {n + 1}-grams" for n, t in enumerate(model.tables))
    print(f"wrote {args.out} ({sizes})")
    return 0


def _cmd_decode(args: argparse.Namespace) -> int:
    vocab = corpus.read_vocabulary(args.vocab)
    lm = ngram_lm.parse_arpa(args.lm) if args.lm else None
    params = _decoder_params(args)
    files = _emission_files(args.emissions)
    results, failures = batch_decode(files, vocab, lm, params, jobs=_jobs(args))
    lines = "".join(f"{utt_id}\t{text}\n" for utt_id, text in results)
    _write_or_print(lines, args.out)
    for utt_id, message in failures:
        print(f"error: {utt_id}: {message}", file=sys.stderr)
    return 2 if failures else 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    manifest = corpus.load_manifest(args.refs)
    hypotheses = _read_hypotheses(args.hyps)
    report = metrics.evaluate(manifest.records, hypotheses, args.group_by, _norm_config(args))
    _write_or_print(report.to_json() + "\n" if args.json else report.to_tsv(), args.out)
    if args.figure:
        from .figures import render_eval_figure

        render_eval_figure(report, args.figure)
    return 0


def _cmd_tune(args: argparse.Namespace) -> int:
    vocab = corpus.read_vocabulary(args.vocab)
    lm = ngram_lm.parse_arpa(args.lm)
    config = _norm_config(args)
    references = corpus.load_manifest(args.refs).by_id()
    pairs = []
    for path in _emission_files(args.emissions):
        utt_id = Path(path).stem
        if utt_id not in references:
            raise ToolkitError(f"no reference for emission file {path}")
        pairs.append(
            (
                corpus.read_emissions(path),
                textnorm.normalize_transcript(references[utt_id].raw_text, config),
            )
        )
    grid = tuner.GridSpec(
        tuple(args.alpha_grid) if args.alpha_grid else tuner.DEFAULT_GRID_VALUES,
        tuple(args.beta_grid) if args.beta_grid else tuner.DEFAULT_GRID_VALUES,
    )
    base = DecoderParams(beam_width=args.beam_width, score_eos=not args.no_eos)
    result = tuner.grid_search(pairs, vocab, lm, grid, base)
    _write_or_print(tuner.emit_grid_report(result), args.out)
    print(
        f"best: alpha={result.best_alpha:g} beta={result.best_beta:g} "
        f"wer={result.best_wer:.2f}%",
        file=sys.stderr,
    )
    if args.figure:
        from .figures import render_grid_figure

        render_grid_figure(result, args.figure)
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    manifest = corpus.load_manifest(args.manifest)
    fields = tuple(name.strip() for name in args.group_by.split(",") if name.strip())
    stats = corpus.dataset_stats(manifest, fields)
    _write_or_print(stats.to_tsv(), args.out)
    if args.figure:
        from .figures import render_stats_figure

        render_stats_figure(stats, args.figure)
    return 0


def _comma_floats(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated decimals, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ctcfuse", description=__doc__)
    commands = parser.add_subparsers(dest="command", required=True)

    normalize = commands.add_parser("normalize", help="clean and filter a manifest")
    normalize.add_argument("--manifest", required=True)
    normalize.add_argument("--out", required=True, help="cleaned manifest path")
    normalize.add_argument("--drop-report", help="TSV of dropped ids (default: <out>.drops.tsv)")
    _add_norm_flags(normalize)
    normalize.set_defaults(handler=_cmd_normalize)

    train_lm = commands.add_parser("train-lm", help="build a Kneser-Ney ARPA model")
    train_lm.add_argument("--corpus", help="normalized corpus, one sentence per line")
    train_lm.add_argument("--manifest", action="append", default=[], help="manifest to fold into the corpus")
    train_lm.add_argument("--text-dir", action="append", default=[], help="directory of extra .txt documents")
    train_lm.add_argument("--order", type=int, default=5)
    train_lm.add_argument("--discount", type=float, default=None, help="fixed discount (default: estimate)")
    train_lm.add_argument("--out", required=True, help="ARPA output path")
    _add_norm_flags(train_lm)
    train_lm.set_defaults(handler=_cmd_train_lm)

    decode = commands.add_parser("decode", help="batch beam-search decoding of emission files")
    decode.add_argument("--emissions", required=True, help="directory of .emis files")
    decode.add_argument("--vocab", required=True, help="sidecar vocabulary file")
    decode.add_argument("--lm", help="ARPA model for shallow fusion")
    decode.add_argument("--alpha", type=float, default=0.5)
    decode.add_argument("--beta", type=float, default=0.001)
    decode.add_argument("--beam-width", type=int, default=100)
    decode.add_argument("--prune-log-floor", type=float, default=None)
    decode.add_argument("--no-eos", action="store_true", help="skip end-of-sentence LM scoring")
    decode.add_argument("--jobs", type=int, default=None, help=f"parallel workers (env {JOBS_ENV_VAR})")
    decode.add_argument("--out", help="hypothesis TSV (default: stdout)")
    decode.set_defaults(handler=_cmd_decode)

    evaluate = commands.add_parser("evaluate", help="score hypotheses against references")
    evaluate.add_argument("--refs", required=True, help="reference manifest")
    evaluate.add_argument("--hyps", required=True, help="hypothesis TSV (id<TAB>text)")
    evaluate.add_argument("--group-by", default="language")
    evaluate.add_argument("--json", action="store_true", help="machine-readable report")
    evaluate.add_argument("--out", help="report path (default: stdout)")
    evaluate.add_argument("--figure", help="also render the report as a figure (png/svg/pdf)")
    _add_norm_flags(evaluate)
    evaluate.set_defaults(handler=_cmd_evaluate)

    tune = commands.add_parser("tune", help="grid-search alpha/beta on a validation set")
    tune.add_argument("--emissions", required=True)
    tune.add_argument("--refs", required=True)
    tune.add_argument("--vocab", required=True)
    tune.add_argument("--lm", required=True)
    tune.add_argument("--alpha-grid", type=_comma_floats, help="comma-separated decimals")
    tune.add_argument("--beta-grid", type=_comma_floats, help="comma-separated decimals")
    tune.add_argument("--beam-width", type=int, default=100)
    tune.add_argument("--no-eos", action="store_true")
    tune.add_argument("--out", help="grid report TSV (default: stdout)")
    tune.add_argument("--figure", help="also render the WER heatmap")
    _add_norm_flags(tune)
    tune.set_defaults(handler=_cmd_tune)

    stats = commands.add_parser("stats", help="hours/samples per group from a manifest")
    stats.add_argument("--manifest", required=True)
    stats.add_argument("--group-by", default="split,language")
    stats.add_argument("--out", help="stats TSV (default: stdout)")
    stats.add_argument("--figure", help="also render the stats chart")
    stats.set_defaults(handler=_cmd_stats)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:
        return int(exit_.code or 0)
    try:
        return args.handler(args)
    except (ToolkitError, ValueError, OSError) as error:
        print(f"ctcfuse: error: {error}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())

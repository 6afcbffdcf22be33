"""Command-line interface: train, tag, eval, compare.

Exit codes: 0 success, 1 usage error, 2 input/format error, 3 numeric or
model failure.  All data outputs are tab-separated and deterministic;
accuracies print with 4 decimal places, round-half-even.
"""

import argparse
import sys
import time
from contextlib import contextmanager
from dataclasses import dataclass
from decimal import Decimal, ROUND_HALF_EVEN

from .corpus import (ModelConfig, UNK, accumulate_counts, load_model,
                     parse_tagged_corpus, save_model)
from .credal import credal_viterbi1, credal_viterbi2, from_prob_hmm
from .errors import EmptyCorpus, EvhmmError, FormatError, ParseError, VersionError
from .prob import estimate_hmm1, estimate_hmm2, viterbi1, viterbi2

USAGE_EXIT = 1
INPUT_EXIT = 2
NUMERIC_EXIT = 3


@dataclass
class RunConfig:
    """Decoder selection and estimation knobs for one command run."""

    order: int = 1
    paradigm: str = "prob"
    bba_mode: str = "bayesian"
    lambda_mode: str = "brants"
    unk_threshold: int = 1
    add_k: float = 0.001
    seed: int = 0


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; the contract here wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


@contextmanager
def _open_in(path):
    if path == "-":
        yield sys.stdin
    else:
        with open(path, encoding="utf-8") as fh:
            yield fh


@contextmanager
def _open_out(path):
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8") as fh:
            yield fh


def _fmt_accuracy(correct, total):
    if total == 0:
        return "-"
    frac = Decimal(correct) / Decimal(total)
    return str(frac.quantize(Decimal("0.0001"), rounding=ROUND_HALF_EVEN))


def _build_parser():
    parser = _Parser(prog="evhmm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_model_flags(p, with_unk=False, with_lambda=True):
        if with_unk:
            p.add_argument("--unk-threshold", type=int, default=None, metavar="N")
        if with_lambda:
            p.add_argument("--lambda", dest="lambda_mode", default=None,
                           choices=("brants", "thede"))
        p.add_argument("--add-k", type=float, default=None, metavar="X")
        p.add_argument("--seed", type=int, default=0, metavar="N")

    p_train = sub.add_parser("train", help="count a tagged corpus into a model file")
    p_train.add_argument("corpus", help="two-column token<TAB>tag file, - for stdin")
    p_train.add_argument("model", help="model file to write")
    add_model_flags(p_train, with_unk=True)

    p_tag = sub.add_parser("tag", help="tag whitespace-tokenized sentences")
    p_tag.add_argument("model")
    p_tag.add_argument("input", nargs="?", default="-",
                       help="one sentence per line, - for stdin")
    p_tag.add_argument("--order", type=int, choices=(1, 2), default=1)
    p_tag.add_argument("--paradigm", choices=("prob", "belief"), default="prob")
    p_tag.add_argument("--bba", dest="bba_mode", default=None,
                       choices=("bayesian", "consonant", "gbt"))
    p_tag.add_argument("--output", default="-")
    add_model_flags(p_tag)

    p_eval = sub.add_parser("eval", help="token accuracy of predictions against gold")
    p_eval.add_argument("gold")
    p_eval.add_argument("pred")
    p_eval.add_argument("--model", default=None,
                        help="model file for the known/unknown word split")

    p_cmp = sub.add_parser("compare", help="run all four decoders over a gold corpus")
    p_cmp.add_argument("model")
    p_cmp.add_argument("gold")
    p_cmp.add_argument("--bba", dest="bba_mode", default=None,
                       choices=("bayesian", "consonant", "gbt"))
    add_model_flags(p_cmp)
    return parser


def _resolve_config(args, stored=None):
    """CLI flags override the model file's stored configuration."""
    cfg = RunConfig()
    if stored is not None:
        cfg.unk_threshold = stored.unk_threshold
        cfg.add_k = stored.add_k
        cfg.lambda_mode = stored.lambda_mode
    if getattr(args, "unk_threshold", None) is not None:
        cfg.unk_threshold = args.unk_threshold
    if getattr(args, "lambda_mode", None) is not None:
        cfg.lambda_mode = args.lambda_mode
    if getattr(args, "add_k", None) is not None:
        cfg.add_k = args.add_k
    if getattr(args, "order", None) is not None:
        cfg.order = args.order
    if getattr(args, "paradigm", None) is not None:
        cfg.paradigm = args.paradigm
    if getattr(args, "bba_mode", None) is not None:
        if cfg.paradigm == "prob" and args.command == "tag":
            print("warning: --bba has no effect with --paradigm prob",
                  file=sys.stderr)
        cfg.bba_mode = args.bba_mode
    cfg.seed = getattr(args, "seed", 0)
    return cfg


def _build_decoder(counts, cfg, order, paradigm):
    """Estimate the right model and return tags(tokens) for one decoder."""
    if order == 1:
        h = estimate_hmm1(counts, add_k=cfg.add_k)
        if paradigm == "prob":
            return lambda toks: viterbi1(h, toks)[0]
        bh = from_prob_hmm(h, cfg.bba_mode)
        return lambda toks: credal_viterbi1(bh, toks)[0]
    h2 = estimate_hmm2(counts, add_k=cfg.add_k, lambda_mode=cfg.lambda_mode)
    if paradigm == "prob":
        return lambda toks: viterbi2(h2, toks)[0]
    bh2 = from_prob_hmm(h2, cfg.bba_mode)
    return lambda toks: credal_viterbi2(bh2, toks)[0]


def cmd_train(args):
    try:
        with _open_in(args.corpus) as fh:
            sentences = parse_tagged_corpus(fh)
    except OSError as exc:
        print(f"evhmm train: cannot read {args.corpus}: {exc.strerror}",
              file=sys.stderr)
        return INPUT_EXIT
    except ParseError as exc:
        print(f"evhmm train: {args.corpus}: {exc}", file=sys.stderr)
        return INPUT_EXIT

    cfg = _resolve_config(args)
    try:
        counts = accumulate_counts(sentences, unk_threshold=cfg.unk_threshold)
    except EmptyCorpus:
        print(f"evhmm train: {args.corpus}: empty corpus", file=sys.stderr)
        return INPUT_EXIT

    model_cfg = ModelConfig(unk_threshold=cfg.unk_threshold, add_k=cfg.add_k,
                            lambda_mode=cfg.lambda_mode)
    try:
        save_model(counts, model_cfg, args.model)
    except OSError as exc:
        print(f"evhmm train: cannot write {args.model}: {exc.strerror}",
              file=sys.stderr)
        return INPUT_EXIT

    known_types = len(counts.vocab) - 1
    lines = [
        ("sentences", counts.sentence_count),
        ("tokens", counts.total_tokens),
        ("tags", len(counts.tags)),
        ("vocab", known_types),
        ("unk", counts.vocab.get(UNK, 0)),
    ]
    for key, value in lines:
        print(f"{key}\t{value}")
    return 0


def _load_model_or_exit(path, command):
    try:
        return load_model(path)
    except OSError as exc:
        print(f"evhmm {command}: cannot read {path}: {exc.strerror}",
              file=sys.stderr)
        raise SystemExit(INPUT_EXIT) from None
    except (FormatError, VersionError) as exc:
        print(f"evhmm {command}: {path}: {exc}", file=sys.stderr)
        raise SystemExit(INPUT_EXIT) from None


def cmd_tag(args):
    counts, stored = _load_model_or_exit(args.model, "tag")
    cfg = _resolve_config(args, stored)
    decode = _build_decoder(counts, cfg, cfg.order, cfg.paradigm)

    try:
        with _open_in(args.input) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        print(f"evhmm tag: cannot read {args.input}: {exc.strerror}",
              file=sys.stderr)
        return INPUT_EXIT

    blocks = []
    for i, line in enumerate(lines):
        tokens = line.split()
        if not tokens:
            continue
        try:
            tags = decode(tokens)
        except EvhmmError as exc:
            print(f"evhmm tag: sentence {i + 1}: {exc}", file=sys.stderr)
            return NUMERIC_EXIT
        blocks.append("\n".join(f"{tok}\t{tag}" for tok, tag in zip(tokens, tags)))
    with _open_out(args.output) as out:
        if blocks:
            out.write("\n\n".join(blocks) + "\n")
    return 0


def _read_two_column(path, command):
    try:
        with _open_in(path) as fh:
            return parse_tagged_corpus(fh)
    except OSError as exc:
        print(f"evhmm {command}: cannot read {path}: {exc.strerror}",
              file=sys.stderr)
        raise SystemExit(INPUT_EXIT) from None
    except ParseError as exc:
        print(f"evhmm {command}: {path}: {exc}", file=sys.stderr)
        raise SystemExit(INPUT_EXIT) from None


def _accuracy_counts(gold, pred, known):
    """(correct, total) overall and split by vocabulary membership."""
    overall = [0, 0]
    known_c = [0, 0]
    unk_c = [0, 0]
    for gsent, psent in zip(gold, pred):
        for (gtok, gtag), (_ptok, ptag) in zip(gsent, psent):
            hit = gtag == ptag
            overall[0] += hit
            overall[1] += 1
            if known is not None:
                bucket = known_c if gtok in known else unk_c
                bucket[0] += hit
                bucket[1] += 1
    return overall, known_c, unk_c


def _check_aligned(gold, pred, command):
    if len(gold) != len(pred):
        print(f"evhmm {command}: sentence counts differ "
              f"(gold {len(gold)}, pred {len(pred)})", file=sys.stderr)
        raise SystemExit(INPUT_EXIT)
    for i, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p):
            print(f"evhmm {command}: sentence {i + 1}: token counts differ "
                  f"(gold {len(g)}, pred {len(p)})", file=sys.stderr)
            raise SystemExit(INPUT_EXIT)
        for j, ((gtok, _), (ptok, _)) in enumerate(zip(g, p)):
            if gtok != ptok:
                print(f"evhmm {command}: sentence {i + 1}, token {j + 1}: "
                      f"surfaces differ ({gtok!r} vs {ptok!r})", file=sys.stderr)
                raise SystemExit(INPUT_EXIT)


def _known_vocab(counts):
    return {tok for tok in counts.vocab if tok != UNK}


def cmd_eval(args):
    gold = _read_two_column(args.gold, "eval")
    pred = _read_two_column(args.pred, "eval")
    _check_aligned(gold, pred, "eval")
    known = None
    if args.model is not None:
        counts, _ = _load_model_or_exit(args.model, "eval")
        known = _known_vocab(counts)
    overall, known_c, unk_c = _accuracy_counts(gold, pred, known)
    print(f"overall\t{_fmt_accuracy(*overall)}")
    if known is not None:
        print(f"known\t{_fmt_accuracy(*known_c)}")
        print(f"unknown\t{_fmt_accuracy(*unk_c)}")
    return 0


DECODERS = (
    ("prob-1", 1, "prob"),
    ("prob-2", 2, "prob"),
    ("belief-1", 1, "belief"),
    ("belief-2", 2, "belief"),
)


def cmd_compare(args):
    counts, stored = _load_model_or_exit(args.model, "compare")
    cfg = _resolve_config(args, stored)
    gold = _read_two_column(args.gold, "compare")
    known = _known_vocab(counts)

    print("decoder\toverall\tknown\tunknown\tms")
    failures = 0
    for name, order, paradigm in DECODERS:
        start = time.perf_counter()
        try:
            decode = _build_decoder(counts, cfg, order, paradigm)
            pred = [list(zip(s.surfaces(), decode(s.surfaces()))) for s in gold]
        except EvhmmError as exc:
            print(f"evhmm compare: {name}: {exc}", file=sys.stderr)
            print(f"{name}\tERROR\tERROR\tERROR\t-")
            failures += 1
            continue
        ms = int(round((time.perf_counter() - start) * 1000))
        overall, known_c, unk_c = _accuracy_counts(gold, pred, known)
        print(f"{name}\t{_fmt_accuracy(*overall)}\t{_fmt_accuracy(*known_c)}"
              f"\t{_fmt_accuracy(*unk_c)}\t{ms}")
    return NUMERIC_EXIT if failures == len(DECODERS) else 0


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    handler = {
        "train": cmd_train,
        "tag": cmd_tag,
        "eval": cmd_eval,
        "compare": cmd_compare,
    }[args.command]
    try:
        code = handler(args)
    except SystemExit:
        raise
    except EvhmmError as exc:
        print(f"evhmm {args.command}: {exc}", file=sys.stderr)
        code = NUMERIC_EXIT
    return code


if __name__ == "__main__":
    sys.exit(main())

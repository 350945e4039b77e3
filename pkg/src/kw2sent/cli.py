"""Command-line interface: ``kw2sent <command> [options]``.

Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import (
    DatasetFormatError,
    LexiconTagger,
    PerceptronTagger,
    TaggedSentence,
    TagVocabulary,
    ToyGrammar,
    UnknownTagError,
    WordVocabulary,
    accuracy,
    build_examples,
    corpus_stats,
    lemmatize,
    load_dataset,
    read_tagged_corpus,
    save_dataset,
    train_perceptron_tagger,
    write_tagged_corpus,
)
from .corpus.tagger import EmptyInputError
from .evalsuite import evaluate, reversal_robustness, similar_templates
from .model import CheckpointError, DecodingError, encode_example, load_checkpoint, save_checkpoint
from .numerics import NumericsError
from .training import TrainConfig, TrainingDiverged, load_config_file, train, write_history

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("kw2sent")

_TOKEN = re.compile(r"\w+(?:'\w+)?|'s|[^\w\s]")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text)


def _require(path: str | None, what: str) -> Path:
    if path is None:
        raise UsageError(f"{what} is required")
    p = Path(path)
    if not p.is_file():
        raise DataError(f"{what} not found: {path}")
    return p


def _load_tagger(path: str | None):
    if path is None:
        return None
    if path == "toy":
        return LexiconTagger()
    p = _require(path, "tagger")
    try:
        return PerceptronTagger.load(p)
    except (ValueError, KeyError) as exc:
        raise DataError(f"{path}: not a tagger model ({exc})") from None


# -- commands -------------------------------------------------------------------
def cmd_make_toy(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    g = ToyGrammar()
    train_s = g.generate(args.train_size, seed=args.seed)
    test_s = g.generate(args.test_size, seed=args.seed + 1, exclude=train_s)
    write_tagged_corpus(out / "train.tagged", train_s)
    write_tagged_corpus(out / "test.tagged", test_s)
    (out / "test.txt").write_text("".join(" ".join(s.tokens) + "\n" for s in test_s), encoding="utf-8")
    print(json.dumps({"train": len(train_s), "test": len(test_s), "dir": str(out)}))
    return EXIT_OK


def cmd_tag_train(args) -> int:
    corpus = read_tagged_corpus(_require(args.input, "--input"))
    if not corpus:
        raise DataError("tagged corpus is empty")
    heldout = []
    if args.heldout > 0:
        n = max(1, int(round(len(corpus) * args.heldout)))
        corpus, heldout = corpus[:-n], corpus[-n:]
    tagger = train_perceptron_tagger(corpus, epochs=args.epochs, seed=args.seed)
    tagger.save(args.out)
    summary = {"sentences": len(corpus), "train_accuracy": accuracy(tagger, corpus)}
    if heldout:
        summary["heldout_accuracy"] = accuracy(tagger, heldout)
    print(json.dumps(summary))
    return EXIT_OK


def cmd_prepare(args) -> int:
    tags = TagVocabulary()
    tagger = _load_tagger(args.tagger)
    if args.input:
        if tagger is None:
            raise UsageError("--tagger is required to prepare raw text")
        lines = _require(args.input, "--input").read_text(encoding="utf-8").splitlines()
        sentences = [TaggedSentence(t, tagger.tag(t)) for t in (tokenize(x) for x in lines) if t]
    elif args.pretagged:
        sentences = read_tagged_corpus(_require(args.pretagged, "--pretagged"))
    else:
        raise UsageError("one of --input or --pretagged is required")
    examples, dropped = build_examples(sentences, tagger, tags, max_length=args.max_length)
    save_dataset(args.out, examples)
    if args.vocab_out:
        vocab = WordVocabulary.build([e.reference for e in examples] + [e.keywords for e in examples], args.min_count)
        vocab.save(args.vocab_out)
    summary = {"written": len(examples), "dropped": dropped, "stats": corpus_stats(examples).to_dict()}
    print(json.dumps(summary))
    return EXIT_OK


def cmd_stats(args) -> int:
    print(json.dumps(corpus_stats(load_dataset(_require(args.data, "--data"))).to_dict()))
    return EXIT_OK


def _train_config(args) -> TrainConfig:
    values: dict[str, str] = {}
    if args.config:
        base = load_config_file(_require(args.config, "--config")).to_dict()
        values.update({k: str(v) for k, v in base.items()})
    elif args.preset:
        values["preset"] = args.preset
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects key=value, got {item!r}")
        values[key.strip()] = value.strip()
    if args.seed is not None:
        values["seed"] = str(args.seed)
    try:
        return TrainConfig.from_mapping(values)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_train(args) -> int:
    config = _train_config(args)
    train_ex = load_dataset(_require(args.train, "--train"))
    if not train_ex:
        raise DataError("training set is empty")
    tags = TagVocabulary()
    if args.vocab:
        vocab = WordVocabulary.load(_require(args.vocab, "--vocab"))
    else:
        vocab = WordVocabulary.build([e.reference for e in train_ex] + [e.keywords for e in train_ex])
    tagger = _load_tagger(args.tagger)
    encoded = [encode_example(e, vocab, tags) for e in train_ex]

    dev_eval = None
    if args.dev:
        dev_ex = load_dataset(_require(args.dev, "--dev"))
        if tagger is None:
            raise UsageError("--dev needs --tagger to score POSMatch")

        def dev_eval(model):
            rep = evaluate(model, dev_ex, vocab, tags, tagger)
            return rep.bleu, (rep.posmatch if rep.posmatch is not None else float("nan"))

    out = Path(args.out)
    embedded = tagger if isinstance(tagger, PerceptronTagger) else None

    def on_checkpoint(tag, model):
        path = out if tag == "last" else out.with_name(out.stem + ".best" + out.suffix)
        save_checkpoint(path, model, vocab, tags, embedded, {"train_config": config.to_dict()})

    try:
        result = train(encoded, config, len(vocab), len(tags), dev_eval, on_checkpoint)
    except TrainingDiverged as exc:
        if exc.history and args.history:
            write_history(args.history, exc.history)
        raise
    if args.history:
        write_history(args.history, result.history)
    last = result.history[-1] if result.history else None
    print(json.dumps({"epochs": len(result.history), "steps": result.steps, "final_loss": last and last.train_loss,
                      "best_epoch": result.best_epoch, "checkpoint": str(out)}))
    return EXIT_OK


class _Runner:
    """Loaded checkpoint plus the keyword/template preprocessing shared by
    ``generate`` and ``repl``."""

    def __init__(self, model_path: str, tagger_path: str | None = None):
        self.ckpt = load_checkpoint(_require(model_path, "--model"))
        self.tagger = _load_tagger(tagger_path) if tagger_path else self.ckpt.tagger

    def keywords(self, text: str, keyword_tags: str | None = None) -> tuple[list[str], list[str]]:
        words = [w.strip().lower() for w in text.split(",") if w.strip()]
        if not words:
            raise DataError("no keywords given")
        tags = self.ckpt.tags
        if keyword_tags:
            given = [t.strip() for t in keyword_tags.split(",") if t.strip()]
            if len(given) != len(words):
                raise DataError(f"{len(words)} keywords but {len(given)} keyword tags")
            universal = [tags.to_universal(t) for t in given]
            lemmas = [lemmatize(w, u) for w, u in zip(words, universal)]
            return lemmas, list(dict.fromkeys(universal))
        if self.tagger is None:
            raise DataError("no tagger available: pass --tagger or --keyword-tags")
        lemmas = [lemmatize(w, tags.to_universal(self.tagger.tag([w])[0])) for w in words]
        kt = [tags.to_universal(self.tagger.tag([lemma])[0]) for lemma in lemmas]
        return lemmas, list(dict.fromkeys(kt))

    def template(self, template: str | None, exemplar: str | None) -> list[str]:
        if template and exemplar:
            raise UsageError("give either a template or an exemplar, not both")
        if exemplar:
            if self.tagger is None:
                raise DataError("an exemplar needs a tagger: pass --tagger")
            tokens = tokenize(exemplar)
            if not tokens:
                raise DataError("exemplar is empty")
            return [self.ckpt.tags.normalize(t) for t in self.tagger.tag(tokens)]
        if self.ckpt.model.no_template:
            return []
        if not template or not template.split():
            raise UsageError("a template or an exemplar is required")
        tmpl = template.split()
        self.ckpt.tags.ids(tmpl)  # raises UnknownTagError listing the vocabulary
        return tmpl

    def generate(self, keywords, template, beam=1, keyword_tags=None, exemplar=None, max_length=None):
        K, KT = self.keywords(keywords, keyword_tags)
        TT = self.template(template, exemplar)
        vocab, tags = self.ckpt.vocab, self.ckpt.tags
        ids, trace = self.ckpt.model.generate(vocab.ids(K), tags.ids(KT), tags.ids(TT), beam=beam, max_length=max_length)
        return vocab.words(ids), trace, TT


def _trace_rows(trace, vocab, tags) -> list[dict]:
    rows = []
    for st in trace.steps:
        rows.append(
            {
                "token": vocab.word(st.token),
                "tag": tags.tag(st.tag) if st.tag is not None else None,
                "lambda": st.lam,
                "alpha": st.alpha,
                "lambda_alpha": [st.lam * a for a in st.alpha],
            }
        )
    return rows


def cmd_generate(args) -> int:
    runner = _Runner(args.model, args.tagger)
    words, trace, _ = runner.generate(
        args.keywords, args.template, args.beam, args.keyword_tags, args.exemplar, args.max_length
    )
    print(" ".join(words))
    if args.trace:
        vocab, tags = runner.ckpt.vocab, runner.ckpt.tags
        payload = {"keywords": vocab.words(trace.keywords), "steps": _trace_rows(trace, vocab, tags)}
        Path(args.trace).write_text(json.dumps(payload, indent=2), encoding="utf-8")
    return EXIT_OK


REPL_HELP = """Enter one request per line:
  keywords | DT NN VBD .        keywords with an explicit template
  keywords > an exemplar text   keywords with an exemplar sentence
  :lambda on|off                show λ per token
  :quit                         exit"""


def cmd_repl(args, stdin=None, stdout=None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    runner = _Runner(args.model, args.tagger)
    show_lambda = False
    print(REPL_HELP, file=stdout)
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        if line in (":quit", ":q", ":exit"):
            break
        if line.startswith(":lambda"):
            show_lambda = line.split()[-1] == "on"
            continue
        try:
            if "|" in line:
                kw, _, tmpl = line.partition("|")
                words, trace, _ = runner.generate(kw, tmpl.strip(), args.beam)
            elif ">" in line:
                kw, _, ex = line.partition(">")
                words, trace, _ = runner.generate(kw, None, args.beam, exemplar=ex.strip())
            elif runner.ckpt.model.no_template:
                words, trace, _ = runner.generate(line, None, args.beam)
            else:
                raise UsageError("expected 'keywords | template' or 'keywords > exemplar'")
        except (UsageError, DataError, UnknownTagError, ValueError, NumericsError, DecodingError) as exc:
            print(f"error: {_message(exc)}", file=stdout)
            continue
        print(" ".join(words), file=stdout)
        if show_lambda:
            print(" ".join(f"{w}/{s.lam:.2f}" for w, s in zip(words, trace.steps)), file=stdout)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    ckpt = load_checkpoint(_require(args.model, "--model"))
    tagger = _load_tagger(args.tagger) if args.tagger else ckpt.tagger
    if tagger is None and not ckpt.model.no_template:
        raise DataError("POSMatch needs a tagger: pass --tagger")
    examples = load_dataset(_require(args.data, "--data"))
    if not examples:
        raise DataError("evaluation set is empty")
    exemplars = None
    if args.scenario == "similar":
        pool = load_dataset(_require(args.exemplars, "--exemplars"))
        exemplars = similar_templates(examples, pool)
    kwargs = dict(
        scenario=args.scenario,
        decode_mode="beam" if args.beam > 1 else "greedy",
        beam_width=args.beam,
        exemplar_templates=exemplars,
    )
    if args.reverse:
        rep = reversal_robustness(ckpt.model, examples, ckpt.vocab, ckpt.tags, tagger, **kwargs)
        payload = rep.to_dict()
        report = rep.original
    else:
        report = evaluate(ckpt.model, examples, ckpt.vocab, ckpt.tags, tagger, **kwargs)
        payload = report.to_dict()
    text = json.dumps(payload, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    if args.audit:
        report.write_audit(args.audit)
    print(text)
    return EXIT_OK


def cmd_inspect(args) -> int:
    ckpt = load_checkpoint(_require(args.model, "--model"))
    examples = load_dataset(_require(args.input, "--input"))
    vocab, tags, model = ckpt.vocab, ckpt.tags, ckpt.model
    content, function = [], []
    with open(args.out, "w", encoding="utf-8") as fh:
        for ex in examples:
            ids, trace = model.generate(vocab.ids(ex.keywords), tags.ids(ex.keyword_tags), tags.ids(ex.template), beam=args.beam)
            rows = _trace_rows(trace, vocab, tags)
            for r in rows:
                if r["tag"] is not None:
                    (content if tags.is_content(r["tag"]) else function).append(r["lambda"])
            record = {
                "keywords": vocab.words(trace.keywords),
                "template": list(ex.template),
                "prediction": vocab.words(ids),
                "steps": rows,
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    summary = {
        "examples": len(examples),
        "mean_lambda_content": float(np.mean(content)) if content else None,
        "mean_lambda_function": float(np.mean(function)) if function else None,
    }
    print(json.dumps(summary))
    return EXIT_OK


# -- parser -------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kw2sent", description="Keyword + POS-template sentence generation.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("make-toy", help="write a toy-grammar tagged corpus")
    s.add_argument("--out-dir", required=True)
    s.add_argument("--train-size", type=int, default=500)
    s.add_argument("--test-size", type=int, default=50)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_make_toy)

    s = sub.add_parser("tag-train", help="train the averaged-perceptron tagger")
    s.add_argument("--input", required=True, help="tagged corpus, word_TAG tokens")
    s.add_argument("--out", required=True)
    s.add_argument("--epochs", type=int, default=10)
    s.add_argument("--heldout", type=float, default=0.0, help="fraction held out for accuracy")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_tag_train)

    s = sub.add_parser("prepare", help="build a dataset from raw or pre-tagged text")
    src = s.add_mutually_exclusive_group()
    src.add_argument("--input", help="raw sentences, one per line")
    src.add_argument("--pretagged", help="tagged corpus, word_TAG tokens")
    s.add_argument("--tagger", help="tagger model (or 'toy' for the toy lexicon)")
    s.add_argument("--out", required=True)
    s.add_argument("--vocab-out")
    s.add_argument("--min-count", type=int, default=1)
    s.add_argument("--max-length", type=int, default=30)
    s.add_argument("--seed", type=int, default=0, help="accepted for uniformity; preparation is deterministic")
    s.set_defaults(func=cmd_prepare)

    s = sub.add_parser("stats", help="corpus statistics of a dataset")
    s.add_argument("--data", required=True)
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser("train", help="train a generator")
    s.add_argument("--train", required=True)
    s.add_argument("--dev")
    s.add_argument("--vocab")
    s.add_argument("--tagger", help="tagger for dev POSMatch; embedded in the checkpoint")
    s.add_argument("--config", help="key = value training config file")
    s.add_argument("--preset", choices=["full", "toy"], default="full")
    s.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config value")
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True, help="final checkpoint; best-dev goes to NAME.best.EXT")
    s.add_argument("--history", help="per-epoch CSV")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("generate", help="generate one sentence")
    s.add_argument("--model", required=True)
    s.add_argument("--keywords", required=True, help="comma-separated")
    s.add_argument("--keyword-tags", help="comma-separated tags, one per keyword")
    tm = s.add_mutually_exclusive_group()
    tm.add_argument("--template", help="space-separated fine tags")
    tm.add_argument("--exemplar", help="sentence whose tag sequence becomes the template")
    s.add_argument("--beam", type=int, default=1)
    s.add_argument("--tagger")
    s.add_argument("--max-length", type=int, help="length cap for a no-template model")
    s.add_argument("--trace", help="write the decode trace as JSON")
    s.add_argument("--seed", type=int, default=0, help="accepted for uniformity; decoding is deterministic")
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("repl", help="interactive generation")
    s.add_argument("--model", required=True)
    s.add_argument("--tagger")
    s.add_argument("--beam", type=int, default=1)
    s.set_defaults(func=cmd_repl)

    s = sub.add_parser("evaluate", help="score a model on a dataset")
    s.add_argument("--model", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--scenario", choices=["exact", "similar"], default="exact")
    s.add_argument("--exemplars", help="dataset whose templates serve as exemplars (similar scenario)")
    s.add_argument("--beam", type=int, default=1)
    s.add_argument("--tagger")
    s.add_argument("--reverse", action="store_true", help="also run with keywords reversed and report deltas")
    s.add_argument("--out")
    s.add_argument("--audit", help="per-example JSONL")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("inspect", help="export λ/attention traces")
    s.add_argument("--model", required=True)
    s.add_argument("--input", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--beam", type=int, default=1)
    s.set_defaults(func=cmd_inspect)
    return p


def _message(exc: BaseException) -> str:
    return str(exc).strip("'\"") if isinstance(exc, KeyError) else str(exc)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if getattr(args, "beam", 1) < 1:
        print("kw2sent: error: --beam must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"kw2sent: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TrainingDiverged, DecodingError, NumericsError, FloatingPointError) as exc:
        print(f"kw2sent: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, DatasetFormatError, CheckpointError, UnknownTagError, EmptyInputError, OSError, ValueError) as exc:
        print(f"kw2sent: error: {_message(exc)}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

"""Command-line surface: train, score, suggest, perturb, evaluate, serve.

Exit codes: 0 success, 2 configuration problem, 3 data problem (unreadable
corpus or model), 4 numeric failure during training, 5 password outside the
model alphabet in single-password commands, 6 rank correlation undefined.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from . import evaluation as ev
from . import meter, neural
from .corpus import CorpusError, EncodingError, LeakCorpus, build_alphabet, load_corpus
from .ngram import NgramError, NgramModel, fit_ngram
from .service import (
    DEFAULT_K,
    build_score_response,
    make_server,
    max_scorable_length,
    model_identifier,
)

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4
EXIT_ALPHABET = 5
EXIT_WS_UNDEFINED = 6

# bucket 0 (predictable) .. 4 (unpredictable), red through green
ANSI_BY_BUCKET = {0: "31", 1: "91", 2: "33", 3: "92", 4: "32"}


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def load_any_model(path: str):
    """Neural model file (magic-tagged) or n-gram table, by sniffing."""
    with open(path, "rb") as fh:
        head = fh.read(len(neural.MAGIC))
    if head == neural.MAGIC:
        return neural.load_model(path)
    return NgramModel.load(path)


def _resolve_model(args):
    path = getattr(args, "model", None) or os.environ.get("IPPSM_MODEL")
    if not path:
        raise CliError(EXIT_CONFIG, "no model given: pass --model or set IPPSM_MODEL")
    return load_any_model(path)


def _check_alphabet(estimator, password: str) -> None:
    """Single-password commands map alphabet problems to exit 5."""
    if len(password) == 0:
        raise CliError(EXIT_ALPHABET, "empty password")
    limit = max_scorable_length(estimator)
    if len(password) > limit:
        raise CliError(EXIT_ALPHABET, f"password longer than the model limit of {limit}")
    for i, ch in enumerate(password):
        if ch not in estimator.alphabet:
            raise CliError(
                EXIT_ALPHABET, f"character {ch!r} at position {i + 1} not in the model alphabet"
            )


# -- train -------------------------------------------------------------------


def cmd_train(args) -> int:
    corpus = load_corpus(args.corpus, fmt=args.format)
    kept = {pw: c for pw, c in corpus.counts.items() if 1 <= len(pw) <= args.max_len}
    dropped = corpus.n_unique - len(kept)
    if not kept:
        raise CorpusError(f"{args.corpus}: no passwords within length {args.max_len}")
    if dropped:
        print(f"dropped {dropped} passwords longer than {args.max_len}", file=sys.stderr)
    corpus = LeakCorpus(kept)
    alphabet = build_alphabet(corpus)
    if args.preset == "ngram":
        try:
            model = fit_ngram(corpus, order=args.order, k=args.add_k, alphabet=alphabet)
        except (ValueError, NgramError) as e:
            raise CliError(EXIT_CONFIG, str(e)) from None
        model.save(args.out)
        print(f"model {args.out} id {model.model_id()} ({corpus.n_unique} passwords)")
        return 0
    try:
        cfg = neural.preset_config(
            args.preset, max_password_length=args.max_len, alphabet_size=alphabet.n_total
        )
        tc = neural.TrainConfig(
            alpha=args.alpha,
            batch_size=args.batch_size,
            learning_rate=args.learning_rate,
            epochs=args.epochs,
            epsilon=args.epsilon,
            seed=args.seed,
        )
    except ValueError as e:
        raise CliError(EXIT_CONFIG, str(e)) from None
    result = neural.train(corpus, alphabet, cfg, tc)
    neural.save_model(result.model, args.out)
    log_path = args.log or args.out + ".log"
    with open(log_path, "w", encoding="utf-8") as fh:
        for i, loss in enumerate(result.epoch_losses, start=1):
            fh.write(f"epoch {i} loss {loss:.6f}\n")
        fh.write(f"model {result.model.model_id()}\n")
    print(f"model {args.out} id {result.model.model_id()} final-loss {result.epoch_losses[-1]:.4f}")
    return 0


# -- score -------------------------------------------------------------------


def _guess_log10(estimator, password: str, args, cache: dict) -> float | None:
    if not args.guess_samples:
        return None
    length = len(password)
    if length not in cache:
        cache[length] = ev.uniform_sample(estimator, length, args.guess_samples, seed=args.seed or 0)
    g = ev.guess_number(estimator, password, cache[length], cap=args.cap).g
    return math.log10(g + 1.0)


def _render_text(resp: dict, color: bool) -> str:
    if color:
        cells = "".join(
            f"\x1b[{ANSI_BY_BUCKET[c['bucket']]}m{c['character']}\x1b[0m" for c in resp["chars"]
        )
    else:
        cells = "".join(str(c["bucket"]) for c in resp["chars"])
        cells = resp["password"] + "  buckets " + cells
    line = f"{cells}  score {resp['score']:.3f}"
    if resp["log10_guess_number"] is not None:
        line += f"  log10-guesses {resp['log10_guess_number']:.2f}"
    return line


def cmd_score(args) -> int:
    estimator = _resolve_model(args)
    color = sys.stdout.isatty() and not args.json
    cache: dict = {}
    if args.password is not None:
        _check_alphabet(estimator, args.password)
        resp = build_score_response(
            estimator,
            args.password,
            k=args.k,
            seed=args.seed,
            log10_guess_number=_guess_log10(estimator, args.password, args, cache),
        )
        if args.json:
            print(json.dumps(resp))
        else:
            print(_render_text(resp, color))
        return 0
    # batch: one record per input line, errors inline, exit 0
    for raw in sys.stdin:
        pw = raw.rstrip("\n")
        try:
            _check_alphabet(estimator, pw)
            resp = build_score_response(
                estimator, pw, k=args.k, seed=args.seed,
                log10_guess_number=_guess_log10(estimator, pw, args, cache),
            )
        except CliError as e:
            print(json.dumps({"schema_version": 1, "password": pw, "error": str(e)}))
            continue
        print(json.dumps(resp) if args.json else _render_text(resp, color))
    return 0


# -- suggest -----------------------------------------------------------------


def cmd_suggest(args) -> int:
    estimator = _resolve_model(args)
    _check_alphabet(estimator, args.password)
    try:
        subs, minimal = meter.suggest(
            estimator,
            args.password,
            args.position,
            list(estimator.alphabet.symbols),
            k=args.k,
            seed=args.seed if args.seed is not None else 0,
        )
    except meter.MeterError as e:
        raise CliError(EXIT_CONFIG, str(e)) from None
    if args.json:
        print(
            json.dumps(
                {
                    "schema_version": 1,
                    "password": args.password,
                    "position": args.position,
                    "substitutes": subs,
                    "already_minimal": minimal,
                    "model_id": model_identifier(estimator),
                }
            )
        )
    elif minimal:
        print("already the least predictable choice at this position")
    else:
        print("try: " + " ".join(subs))
    return 0


# -- perturb -----------------------------------------------------------------


def _scorable(estimator, corpus: LeakCorpus):
    limit = max_scorable_length(estimator)
    good, skipped = {}, 0
    for pw, c in corpus.counts.items():
        if 1 <= len(pw) <= limit and all(ch in estimator.alphabet for ch in pw):
            good[pw] = c
        else:
            skipped += 1
    if skipped:
        print(f"skipped {skipped} passwords outside the model alphabet", file=sys.stderr)
    if not good:
        raise CorpusError("no corpus passwords scorable by this model")
    return LeakCorpus(good)


def cmd_perturb(args) -> int:
    estimator = _resolve_model(args)
    corpus = _scorable(estimator, load_corpus(args.corpus, fmt=args.format))
    lengths = [len(pw) for pw in corpus.counts]
    length = args.length or max(set(lengths), key=lambda l: (lengths.count(l), -l))
    pws = [pw for pw in corpus.counts if len(pw) == length]
    if not pws:
        raise CorpusError(f"no corpus passwords of length {length}")
    pws.sort(key=lambda pw: (-corpus.counts[pw], pw))  # most common (weakest) first
    if args.limit:
        pws = pws[: args.limit]
    n_values = tuple(int(v) for v in args.n_values.split(","))
    modes = tuple(args.modes.split(","))
    sample = ev.uniform_sample(estimator, length, args.mc_samples, seed=args.seed)
    report = ev.run_perturbation_experiment(
        estimator,
        pws,
        n_values,
        list(estimator.alphabet.symbols),
        sample,
        cap=args.cap,
        seed=args.seed,
        modes=modes,
    )
    ev.write_report_csv(report, args.out)
    print(ev.format_report(report))
    print(f"wrote {args.out} ({report.n_passwords} passwords of length {length})")
    return 0


# -- evaluate ----------------------------------------------------------------


def cmd_evaluate(args) -> int:
    estimator = _resolve_model(args)
    corpus = _scorable(estimator, load_corpus(args.corpus, fmt=args.format))
    truth = ev.ground_truth_ranks(corpus)
    measured = ev.meter_ranks(estimator, truth.passwords)
    try:
        ws = ev.weighted_spearman(truth.ranks, measured, truth.weights)
    except ev.EvaluationError as e:
        raise CliError(EXIT_WS_UNDEFINED, f"weighted Spearman undefined: {e}") from None
    if args.json:
        print(
            json.dumps(
                {
                    "schema_version": 1,
                    "ws": ws,
                    "n_passwords": len(truth.passwords),
                    "model_id": model_identifier(estimator),
                }
            )
        )
    else:
        print(f"ws {ws:.4f} over {len(truth.passwords)} passwords (model {model_identifier(estimator)})")
    return 0


# -- serve -------------------------------------------------------------------


def cmd_serve(args) -> int:
    estimator = _resolve_model(args)
    try:
        server = make_server(estimator, args.host, args.port)
    except OSError as e:
        raise CliError(EXIT_CONFIG, f"cannot bind {args.host}:{args.port}: {e}") from None
    host, port = server.server_address[:2]
    print(f"serving model {model_identifier(estimator)} on http://{host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


# -- parser ------------------------------------------------------------------


def _add_model_arg(p):
    p.add_argument("--model", help="model file (default: $IPPSM_MODEL)")


def _add_format_arg(p):
    p.add_argument("--format", default="plain-lines",
                   choices=["plain-lines", "count-prefixed"],
                   help="corpus file layout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ippsm", description="character-level password strength meter"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit the autoencoder on a leak corpus")
    p.add_argument("--corpus", required=True)
    _add_format_arg(p)
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument(
        "--preset", default="desk", choices=["small", "medium", "large", "desk", "ngram"]
    )
    p.add_argument("--order", type=int, default=3, help="context length + 1 (ngram preset)")
    p.add_argument("--add-k", type=float, default=0.01, help="smoothing (ngram preset)")
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--learning-rate", type=float, default=1e-4)
    p.add_argument("--alpha", type=float, default=10.0)
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--max-len", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--log", help="loss trace file (default: <out>.log)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="score one password or a stdin batch")
    _add_model_arg(p)
    p.add_argument("--password", help="score this password; omit to read lines from stdin")
    p.add_argument("--json", action="store_true", help="emit ScoreResponse JSON")
    p.add_argument("--k", type=int, default=DEFAULT_K, help="substitutes per position")
    p.add_argument("--seed", type=int, help="fix suggestion sampling")
    p.add_argument("--guess-samples", type=int, default=0,
                   help="Monte Carlo sample size for a log10 guess number (0 = skip)")
    p.add_argument("--cap", type=float, default=ev.DEFAULT_GUESS_CAP)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("suggest", help="stronger substitutes for one position")
    _add_model_arg(p)
    p.add_argument("--password", required=True)
    p.add_argument("--position", type=int, required=True, help="1-based character position")
    p.add_argument("--k", type=int, default=DEFAULT_K)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_suggest)

    p = sub.add_parser("perturb", help="AGI/PNP perturbation experiment to CSV")
    _add_model_arg(p)
    p.add_argument("--corpus", required=True)
    _add_format_arg(p)
    p.add_argument("--out", required=True, help="CSV report path")
    p.add_argument("--modes", default="baseline,semi,fully")
    p.add_argument("--n-values", default="1,2,3")
    p.add_argument("--length", type=int, help="password length to test (default: most common)")
    p.add_argument("--limit", type=int, help="use only the most frequent N passwords")
    p.add_argument("--mc-samples", type=int, default=20000)
    p.add_argument("--cap", type=float, default=ev.DEFAULT_GUESS_CAP)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("evaluate", help="weighted Spearman against leak frequencies")
    _add_model_arg(p)
    p.add_argument("--corpus", required=True)
    _add_format_arg(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("serve", help="HTTP scoring service")
    _add_model_arg(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except (CorpusError, NgramError, neural.ModelFormatError, EncodingError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as e:
        print(f"error: {e.strerror}: {e.filename}", file=sys.stderr)
        return EXIT_DATA
    except ev.EvaluationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except neural.TrainingError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

"""HTTP JSON scoring service and the ScoreResponse builder it shares with the CLI.

The service is intentionally small: one immutable model, a threaded stdlib
HTTP server, two routes. POST /score returns per-character feedback plus
substitution suggestions in a single round trip; GET /health answers "ok".
The model is never mutated, so requests need no locking.
"""

from __future__ import annotations

import json
import logging
import os
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from . import meter
from .neural import NeuralModel
from .ngram import NgramModel

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
DEFAULT_K = 3
FALLBACK_MAX_LENGTH = 64  # estimators without an architectural bound


class RequestError(ValueError):
    """Client-side request problem; status tells 400 from 422."""

    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status


def model_identifier(estimator) -> str:
    if hasattr(estimator, "model_id"):
        return estimator.model_id()
    return type(estimator).__name__


def max_scorable_length(estimator) -> int:
    if isinstance(estimator, NeuralModel):
        return estimator.config.max_password_length
    if isinstance(estimator, NgramModel) and estimator.mode == "length" and estimator.length_counts:
        return max(estimator.length_counts)
    return FALLBACK_MAX_LENGTH


def build_score_response(
    estimator,
    password: str,
    k: int = DEFAULT_K,
    seed: int | None = None,
    log10_guess_number: float | None = None,
) -> dict:
    """ScoreResponse dict: echo, per-character records, score, model id.

    One conditionals evaluation feeds the score, the buckets and every
    position's suggestions. Suggestion sampling derives a per-position
    stream from the request seed, so a fixed seed pins the whole response.
    """
    if seed is None:
        seed = int.from_bytes(os.urandom(8), "little")
    rep = meter.score(estimator, password)
    pool = list(estimator.alphabet.symbols)
    chars = []
    for i, ch in enumerate(password, start=1):
        pos_seed = int(np.random.SeedSequence([seed, i]).generate_state(1)[0])
        subs, _ = meter.suggest(
            estimator, password, i, pool, k=k, seed=pos_seed, conditionals=rep.distributions
        )
        chars.append(
            {
                "character": ch,
                "q": float(rep.q[i - 1]),
                "bucket": rep.buckets[i - 1],
                "substitutes": subs,
            }
        )
    return {
        "schema_version": SCHEMA_VERSION,
        "password": password,
        "model_id": model_identifier(estimator),
        "score": rep.score,
        "log10_guess_number": log10_guess_number,
        "chars": chars,
    }


def _validate_request(estimator, obj) -> tuple:
    if not isinstance(obj, dict):
        raise RequestError(400, "request body must be a JSON object")
    password = obj.get("password")
    if not isinstance(password, str):
        raise RequestError(400, "missing or non-string 'password'")
    k = obj.get("k", DEFAULT_K)
    if not isinstance(k, int) or isinstance(k, bool) or k < 1:
        raise RequestError(400, "'k' must be a positive integer")
    seed = obj.get("seed")
    if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool) or seed < 0):
        raise RequestError(400, "'seed' must be a non-negative integer")
    if len(password) == 0:
        raise RequestError(422, "empty password")
    limit = max_scorable_length(estimator)
    if len(password) > limit:
        raise RequestError(422, f"password longer than the model limit of {limit} characters")
    for i, ch in enumerate(password):
        if ch not in estimator.alphabet:
            raise RequestError(422, f"character {ch!r} at position {i + 1} not in the model alphabet")
    return password, k, seed


def make_handler(estimator):
    """Handler class closed over one immutable estimator."""

    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def _reply(self, status: int, body: bytes, content_type: str) -> None:
            self.send_response(status)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _reply_json(self, status: int, obj) -> None:
            self._reply(status, json.dumps(obj).encode("utf-8"), "application/json; charset=utf-8")

        def do_GET(self):
            if self.path == "/health":
                self._reply(200, b"ok", "text/plain; charset=utf-8")
            else:
                self._reply_json(404, {"error": f"no route {self.path}"})

        def do_POST(self):
            if self.path != "/score":
                self._reply_json(404, {"error": f"no route {self.path}"})
                return
            try:
                n = int(self.headers.get("Content-Length", 0))
                try:
                    obj = json.loads(self.rfile.read(n).decode("utf-8"))
                except (ValueError, UnicodeDecodeError):
                    raise RequestError(400, "malformed JSON body") from None
                password, k, seed = _validate_request(estimator, obj)
                resp = build_score_response(estimator, password, k=k, seed=seed)
            except RequestError as e:
                self._reply_json(e.status, {"error": str(e)})
                return
            self._reply_json(200, resp)

        def log_message(self, fmt, *args):
            log.debug("%s %s", self.address_string(), fmt % args)

    return Handler


def make_server(estimator, host: str = "127.0.0.1", port: int = 8765) -> ThreadingHTTPServer:
    """Bound threaded server; call serve_forever() (or use in tests)."""
    return ThreadingHTTPServer((host, port), make_handler(estimator))

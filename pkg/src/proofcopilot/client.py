"""HTTP client for external generation and encoding servers.

The wire contract, shared with service.py:

    POST /api/generate
        {"name": ..., "input": ..., "prefix": ...,
         "params": {"numReturnSequences": k, "temperature": t}}
    ->  {"outputs": [{"text": ..., "score": ...}, ...]}

    POST /api/encode
        {"name": ..., "input": ...}
    ->  {"outputs": [n_0, ..., n_{d-1}]}

Transport failures (connection refused, timeouts, 5xx) raise
ExternalUnavailableError after two retries; a reachable server that
answers 4xx or malforms its reply raises ProtocolError immediately.
Replies are validated and re-sorted, and scores are clamped into
[1e-6, 1] so a sloppy server cannot poison downstream invariants.
"""

from __future__ import annotations

import http.client
import json
import math
import socket
from typing import TYPE_CHECKING

import numpy as np

from .errors import ExternalUnavailableError, ProtocolError

if TYPE_CHECKING:  # pragma: no cover - import cycle guard, types only
    from .generation import GeneratorParams, ScoredText

DEFAULT_TIMEOUT = 2.0
DEFAULT_RETRIES = 2

SCORE_FLOOR = 1e-6


def _post_json(host: str, port: int, path: str, payload: dict, timeout: float) -> tuple[int, bytes]:
    body = json.dumps(payload).encode("utf-8")
    conn = http.client.HTTPConnection(host, port, timeout=timeout)
    try:
        conn.request("POST", path, body, {"Content-Type": "application/json"})
        resp = conn.getresponse()
        return resp.status, resp.read()
    finally:
        conn.close()


def _request(
    host: str, port: int, path: str, payload: dict, timeout: float, retries: int
) -> bytes:
    last: Exception | None = None
    for _ in range(retries + 1):
        try:
            status, data = _post_json(host, port, path, payload, timeout)
        except (ConnectionError, socket.timeout, TimeoutError, OSError) as e:
            last = e
            continue
        if 400 <= status < 500:
            raise ProtocolError(f"server rejected request: HTTP {status}")
        if status != 200:
            last = ExternalUnavailableError(f"HTTP {status}")
            continue
        return data
    raise ExternalUnavailableError(f"{host}:{port}{path} unreachable: {last}")


def _parse_reply(data: bytes) -> list:
    try:
        reply = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ProtocolError(f"reply is not JSON: {e}") from None
    if not isinstance(reply, dict) or "outputs" not in reply:
        raise ProtocolError("reply must be an object with an 'outputs' array")
    outputs = reply["outputs"]
    if not isinstance(outputs, list):
        raise ProtocolError("'outputs' must be an array")
    return outputs


def external_generate(
    name: str,
    host: str,
    port: int,
    input_text: str,
    prefix: str,
    params: "GeneratorParams",
    *,
    timeout: float = DEFAULT_TIMEOUT,
    retries: int = DEFAULT_RETRIES,
) -> list["ScoredText"]:
    from .generation import ScoredText, sort_scored

    payload = {
        "name": name,
        "input": input_text,
        "prefix": prefix,
        "params": {
            "numReturnSequences": params.num_return_sequences,
            "temperature": params.temperature,
            "minScore": params.min_score,
            "maxLength": params.max_length,
        },
    }
    outputs = _parse_reply(_request(host, port, "/api/generate", payload, timeout, retries))
    results = []
    for i, item in enumerate(outputs):
        if not isinstance(item, dict) or "text" not in item or "score" not in item:
            raise ProtocolError(f"output {i} must be an object with text and score")
        text, score = item["text"], item["score"]
        if not isinstance(text, str):
            raise ProtocolError(f"output {i} text must be a string")
        if isinstance(score, bool) or not isinstance(score, (int, float)):
            raise ProtocolError(f"output {i} score must be a number")
        score = float(score)
        if not math.isfinite(score):
            raise ProtocolError(f"output {i} score must be finite")
        results.append(ScoredText(text, min(1.0, max(SCORE_FLOOR, score))))
    return sort_scored(results)


def external_encode(
    name: str,
    host: str,
    port: int,
    input_text: str,
    *,
    timeout: float = DEFAULT_TIMEOUT,
    retries: int = DEFAULT_RETRIES,
) -> np.ndarray:
    payload = {"name": name, "input": input_text}
    outputs = _parse_reply(_request(host, port, "/api/encode", payload, timeout, retries))
    if not outputs:
        raise ProtocolError("empty embedding")
    for i, value in enumerate(outputs):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ProtocolError(f"embedding entry {i} must be a number")
        if not math.isfinite(float(value)):
            raise ProtocolError(f"embedding entry {i} must be finite")
    return np.asarray(outputs, dtype=np.float32)

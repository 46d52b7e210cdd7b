"""HTTP front door: proving sessions, tool endpoints, and the model wire.

One process hosts three things. Interactive sessions keep a proof state
per client and expose tactic application, undo, suggestions, search and
premise retrieval; tool-level failures come back as HTTP 200 with an
``error`` object so the UI can render them, while transport mistakes
(bad JSON, unknown session, unknown route) use 4xx. The generation wire
protocol (POST /api/generate, /api/encode) is served by the builtin
generator and encoder, which lets the process stand in for an external
model server in loopback tests. Finally, an optional static directory is
served under /ui for the browser client.

Sessions are in-memory, keyed by opaque tokens, and expire after thirty
idle minutes. Requests for different sessions run concurrently (one
thread per request); requests for the same session serialize on its
lock, except that a search snapshots the state and runs unlocked so a
second search request can be answered with a Busy error immediately.
"""

from __future__ import annotations

import json
import mimetypes
import re
import threading
import time
import uuid
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any, Mapping

from .corpus import Corpus
from .errors import (
    BusyError,
    CopilotError,
    EmptyInputError,
    InvalidParamError,
    NoGoalsError,
    ParseError,
    TacticError,
    UnknownSessionError,
    UnknownTheoremError,
)
from .formula import Formula, parse_formula, pretty
from .generation import (
    EncoderSpec,
    GeneratorParams,
    GeneratorSpec,
    generate,
    hash_encode,
    merge_params,
)
from .kernel import TURNSTILE, ProofState, Sequent, apply_tactic, pretty_goal, parse_goal
from .premises import PremiseIndex, build_index, select_premises
from .search import SearchLimits, best_first_search, default_rule_set
from .suggest import suggest_tactics
from .tactics import Tactic, parse_script, render_tactic

SESSION_TTL_SECONDS = 30 * 60
BUILTIN_MODEL_NAME = "builtin"
_MAX_BODY = 1 << 20

_WIRE_PARAM_NAMES = {
    "numReturnSequences": "num_return_sequences",
    "temperature": "temperature",
    "minScore": "min_score",
    "maxLength": "max_length",
}
_WIRE_LIMIT_NAMES = {
    "maxExpansions": "max_expansions",
    "maxDepth": "max_depth",
    "timeoutMillis": "timeout_millis",
}


@dataclass(frozen=True)
class ServiceConfig:
    generator: GeneratorSpec = field(default_factory=GeneratorSpec.builtin)
    encoder: EncoderSpec = field(default_factory=EncoderSpec.hash_trigram)
    corpus: Corpus | None = None
    static_dir: Path | None = None
    session_ttl: float = SESSION_TTL_SECONDS
    debug: bool = False


class _Session:
    __slots__ = (
        "id", "goal", "lemmas", "modules", "history", "states",
        "lock", "searching", "last_access",
    )

    def __init__(
        self,
        session_id: str,
        goal: Sequent,
        lemmas: Mapping[str, Formula],
        modules: tuple[str, ...],
    ):
        self.id = session_id
        self.goal = goal
        self.lemmas = dict(lemmas)
        self.modules = modules
        self.history: list[Tactic] = []
        self.states: list[ProofState] = [ProofState((goal,), tuple(lemmas), False)]
        self.lock = threading.Lock()
        self.searching = False
        self.last_access = time.monotonic()

    @property
    def state(self) -> ProofState:
        return self.states[-1]


def _goal_view(goal: Sequent) -> dict:
    return {
        "text": pretty_goal(goal),
        "hypotheses": [
            {"name": h.name, "formula": pretty(h.formula)} for h in goal.hypotheses
        ],
        "target": pretty(goal.target),
    }


class ProofService:
    """Session bookkeeping and tool dispatch behind the HTTP handler."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self._sessions: dict[str, _Session] = {}
        self._lock = threading.Lock()
        self._index: PremiseIndex | None = None
        if config.corpus is not None and config.corpus.records:
            self._index = build_index(config.corpus.records, config.encoder)

    # -- session lifecycle ---------------------------------------------------

    def _purge(self, now: float) -> None:
        dead = [
            sid
            for sid, sess in self._sessions.items()
            if now - sess.last_access > self.config.session_ttl
        ]
        for sid in dead:
            del self._sessions[sid]

    def _get(self, session_id: str) -> _Session:
        now = time.monotonic()
        with self._lock:
            self._purge(now)
            sess = self._sessions.get(session_id)
            if sess is None:
                raise UnknownSessionError(f"no session {session_id!r}")
            sess.last_access = now
            return sess

    def create_session(self, goal_text: str | None, theorem_name: str | None) -> _Session:
        corpus = self.config.corpus
        if theorem_name is not None:
            if corpus is None:
                raise UnknownTheoremError("no corpus is loaded")
            cf, entry = corpus.find_theorem(theorem_name)
            goal = entry.goal()
            lemmas: Mapping[str, Formula] = corpus.scope_for(cf)
            modules = cf.scope_modules()
        else:
            assert goal_text is not None
            # bare formulas are welcome; a turnstile introduces hypotheses
            if TURNSTILE in goal_text or "|-" in goal_text:
                goal = parse_goal(goal_text)
            else:
                goal = Sequent((), parse_formula(goal_text))
            if corpus is not None:
                lemmas = corpus.library
                modules = tuple(dict.fromkeys(c.module for c in corpus.files))
            else:
                lemmas, modules = {}, ()
        sess = _Session(uuid.uuid4().hex, goal, lemmas, modules)
        now = time.monotonic()
        with self._lock:
            self._purge(now)
            self._sessions[sess.id] = sess
        return sess

    # -- views ---------------------------------------------------------------

    def view(self, sess: _Session) -> dict:
        state = sess.state
        return {
            "id": sess.id,
            "goals": [_goal_view(g) for g in state.goals],
            "usedSorry": state.used_sorry,
            "proved": not state.goals,
            "history": [render_tactic(t) for t in sess.history],
        }

    # -- state transitions ---------------------------------------------------

    def apply_script_text(self, sess: _Session, text: str) -> dict:
        script = parse_script(text)
        if not script.steps:
            raise ParseError("empty tactic text", 1, 1)
        with sess.lock:
            state = sess.state
            applied: list[ProofState] = []
            for step in script.steps:
                state = apply_tactic(state, step, sess.lemmas)
                applied.append(state)
            sess.history.extend(script.steps)
            sess.states.extend(applied)
            return self.view(sess)

    def undo(self, sess: _Session) -> dict:
        with sess.lock:
            if not sess.history:
                raise InvalidParamError("nothing to undo")
            sess.history.pop()
            sess.states.pop()
            return self.view(sess)

    def consistent(self, sess: _Session) -> dict:
        with sess.lock:
            state = ProofState((sess.goal,), tuple(sess.lemmas), False)
            for step in sess.history:
                state = apply_tactic(state, step, sess.lemmas)
            return {"consistent": state == sess.state}

    # -- tools ---------------------------------------------------------------

    def suggest(self, sess: _Session) -> dict:
        with sess.lock:
            state = sess.state
        result = suggest_tactics(state, self.config.generator, sess.lemmas, check=True)
        return {
            "checked": result.checked,
            "suggestions": [
                {
                    "text": s.tactic_text,
                    "category": s.category.value if s.category else None,
                    "score": s.score,
                    "remaining": [pretty_goal(g) for g in s.remaining],
                }
                for s in result.suggestions
            ],
        }

    def search(self, sess: _Session, raw_limits: Mapping[str, Any] | None) -> dict:
        limits = _parse_limits(raw_limits)
        with sess.lock:
            if sess.searching:
                raise BusyError("a search is already running for this session")
            state = sess.state
            if not state.goals:
                raise NoGoalsError("no goals to search")
            sess.searching = True
        try:
            spec = self.config.generator
            result = best_first_search(
                state.goals[0],
                default_rule_set(use_generator=True),
                spec,
                sess.lemmas,
                limits,
            )
        finally:
            with sess.lock:
                sess.searching = False
        return {
            "status": result.status.value,
            "script": (
                [render_tactic(t) for t in result.script.steps] if result.script else None
            ),
            "scriptText": (
                "; ".join(render_tactic(t) for t in result.script.steps)
                if result.script
                else None
            ),
            "expansions": result.expansions,
            "elapsedMillis": result.elapsed_millis,
        }

    def premises(self, sess: _Session, k: int) -> dict:
        with sess.lock:
            state = sess.state
        if not state.goals:
            raise NoGoalsError("no goals to select premises for")
        if self._index is None:
            return {"premises": []}
        ranked = select_premises(self._index, state.goals[0], sess.modules, k)
        out = []
        for r in ranked:
            entry: dict[str, Any] = {
                "name": r.record.name,
                "module": r.record.module,
                "score": r.score,
                "inScope": r.in_scope,
            }
            if r.in_scope:
                entry["annotation"] = {
                    "signature": r.annotation.signature,  # type: ignore[union-attr]
                    "docstring": r.annotation.docstring,  # type: ignore[union-attr]
                }
            else:
                entry["annotation"] = {
                    "requiredImport": r.annotation.required_import,  # type: ignore[union-attr]
                    "definitionSource": r.annotation.definition_source,  # type: ignore[union-attr]
                }
            out.append(entry)
        return {"premises": out}

    # -- model wire ----------------------------------------------------------

    def wire_generate(self, body: Mapping[str, Any]) -> dict:
        input_text, prefix, params = _validate_generate_body(body)
        outputs = generate(GeneratorSpec.builtin(params), input_text, prefix)
        return {"outputs": [{"text": st.text, "score": st.score} for st in outputs]}

    def wire_encode(self, body: Mapping[str, Any]) -> dict:
        name = body.get("name")
        if not isinstance(name, str):
            raise _BadRequest("name must be a string")
        if name != BUILTIN_MODEL_NAME:
            raise _NotFound(f"unknown model {name!r}")
        input_text = body.get("input")
        if not isinstance(input_text, str) or not input_text:
            raise _BadRequest("input must be a non-empty string")
        vector = hash_encode(input_text, self.config.encoder.dim)
        return {"outputs": [float(x) for x in vector]}


class _BadRequest(Exception):
    pass


class _NotFound(Exception):
    pass


def _parse_limits(raw: Mapping[str, Any] | None) -> SearchLimits:
    if raw is None:
        return SearchLimits()
    if not isinstance(raw, Mapping):
        raise _BadRequest("limits must be an object")
    kwargs = {}
    for key, value in raw.items():
        name = _WIRE_LIMIT_NAMES.get(str(key))
        if name is None:
            raise _BadRequest(f"unknown limit {key!r}")
        if isinstance(value, bool) or not isinstance(value, int) or value < 1:
            raise _BadRequest(f"limit {key!r} must be a positive integer")
        kwargs[name] = value
    return SearchLimits(**kwargs)


def _validate_generate_body(
    body: Mapping[str, Any],
) -> tuple[str, str, GeneratorParams]:
    name = body.get("name")
    if not isinstance(name, str):
        raise _BadRequest("name must be a string")
    if name != BUILTIN_MODEL_NAME:
        raise _NotFound(f"unknown model {name!r}")
    input_text = body.get("input")
    if not isinstance(input_text, str):
        raise _BadRequest("input must be a string")
    prefix = body.get("prefix", "")
    if not isinstance(prefix, str):
        raise _BadRequest("prefix must be a string")
    raw_params = body.get("params", {})
    if not isinstance(raw_params, Mapping):
        raise _BadRequest("params must be an object")
    overrides = {}
    for key, value in raw_params.items():
        field_name = _WIRE_PARAM_NAMES.get(str(key))
        if field_name is None:
            raise _BadRequest(f"unknown parameter {key!r}")
        overrides[field_name] = value
    try:
        params = merge_params(GeneratorParams(), overrides)
    except InvalidParamError as e:
        raise _BadRequest(str(e)) from None
    return input_text, prefix, params


_ERROR_KINDS: dict[type, str] = {
    ParseError: "Parse",
    TacticError: "Tactic",
    NoGoalsError: "NoGoals",
    BusyError: "Busy",
    InvalidParamError: "InvalidParam",
    UnknownTheoremError: "UnknownTheorem",
    EmptyInputError: "EmptyInput",
}


def _error_payload(e: CopilotError) -> dict:
    kind = _ERROR_KINDS.get(type(e))
    if kind is None:
        kind = type(e).__name__.removesuffix("Error")
    payload: dict[str, Any] = {"kind": kind, "message": str(e)}
    if isinstance(e, TacticError):
        payload["tacticErrorKind"] = e.kind.value
    return {"error": payload}


_SESSION_ROUTE = re.compile(r"^/api/session/([0-9a-f]{32})(?:/([a-z]+))?$")


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    @property
    def service(self) -> ProofService:
        return self.server.service  # type: ignore[attr-defined]

    def log_message(self, format: str, *args: Any) -> None:  # noqa: A002
        if self.service.config.debug:
            super().log_message(format, *args)

    # -- plumbing ------------------------------------------------------------

    def _send(self, status: int, payload: dict | bytes, content_type: str = "application/json") -> None:
        if isinstance(payload, dict):
            body = (json.dumps(payload) + "\n").encode("utf-8")
            content_type = "application/json; charset=utf-8"
        else:
            body = payload
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if length > _MAX_BODY:
            raise _BadRequest("request body too large")
        raw = self.rfile.read(length) if length else b""
        if not raw:
            return {}
        try:
            body = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise _BadRequest(f"body is not valid JSON: {e}") from None
        if not isinstance(body, dict):
            raise _BadRequest("body must be a JSON object")
        return body

    def _dispatch(self, method: str) -> None:
        try:
            self._route(method)
        except _BadRequest as e:
            self._send(400, {"error": {"kind": "BadRequest", "message": str(e)}})
        except _NotFound as e:
            self._send(404, {"error": {"kind": "NotFound", "message": str(e)}})
        except UnknownSessionError as e:
            self._send(404, {"error": {"kind": "UnknownSession", "message": str(e)}})
        except CopilotError as e:
            # tool-level failure: a well-formed request whose operation failed
            self._send(200, _error_payload(e))
        except Exception as e:  # pragma: no cover - last-resort guard
            self._send(500, {"error": {"kind": "Internal", "message": str(e)}})

    def do_POST(self) -> None:
        self._dispatch("POST")

    def do_GET(self) -> None:
        self._dispatch("GET")

    # -- routing -------------------------------------------------------------

    def _route(self, method: str) -> None:
        path = self.path.split("?", 1)[0]
        service = self.service
        if path == "/api/session" and method == "POST":
            body = self._read_body()
            goal_text, theorem = body.get("goal"), body.get("theorem")
            if (goal_text is None) == (theorem is None):
                raise _BadRequest("provide exactly one of goal or theorem")
            if goal_text is not None and not isinstance(goal_text, str):
                raise _BadRequest("goal must be a string")
            if theorem is not None and not isinstance(theorem, str):
                raise _BadRequest("theorem must be a string")
            sess = service.create_session(goal_text, theorem)
            self._send(200, service.view(sess))
            return
        m = _SESSION_ROUTE.match(path)
        if m:
            sess = service._get(m.group(1))
            action = m.group(2)
            if action is None and method == "GET":
                with sess.lock:
                    self._send(200, service.view(sess))
                return
            if action is None:
                raise _BadRequest("POST needs an action segment")
            self._handle_action(method, sess, action)
            return
        if path == "/api/generate" and method == "POST":
            self._send(200, service.wire_generate(self._read_body()))
            return
        if path == "/api/encode" and method == "POST":
            self._send(200, service.wire_encode(self._read_body()))
            return
        if method == "GET" and (path == "/" or path.startswith("/ui")):
            self._serve_static(path)
            return
        raise _NotFound(f"no route {method} {path}")

    def _handle_action(self, method: str, sess: _Session, action: str) -> None:
        service = self.service
        if action == "consistency":
            if not service.config.debug:
                raise _NotFound("consistency endpoint is debug-only")
            if method != "GET":
                raise _BadRequest("consistency is GET-only")
            self._send(200, service.consistent(sess))
            return
        if method != "POST":
            raise _BadRequest(f"{action} requires POST")
        body = self._read_body()
        if action == "tactic":
            text = body.get("text")
            if not isinstance(text, str):
                raise _BadRequest("text must be a string")
            self._send(200, service.apply_script_text(sess, text))
        elif action == "undo":
            self._send(200, service.undo(sess))
        elif action == "suggest":
            self._send(200, service.suggest(sess))
        elif action == "search":
            self._send(200, service.search(sess, body.get("limits")))
        elif action == "premises":
            k = body.get("k", 4)
            if isinstance(k, bool) or not isinstance(k, int) or k < 1:
                raise _BadRequest("k must be a positive integer")
            self._send(200, service.premises(sess, k))
        else:
            raise _NotFound(f"unknown action {action!r}")

    # -- static files --------------------------------------------------------

    def _serve_static(self, path: str) -> None:
        # /, /ui and /ui/ all serve the index; the bundle uses absolute
        # /ui/<asset> URLs so no redirect dance is needed.
        root = self.service.config.static_dir
        if root is None:
            raise _NotFound("no static bundle configured")
        rel = path.removeprefix("/ui").lstrip("/") or "index.html"
        target = (root / rel).resolve()
        if not str(target).startswith(str(root.resolve())) or not target.is_file():
            raise _NotFound(f"no static file {rel!r}")
        ctype = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
        self._send(200, target.read_bytes(), ctype)


class ProofServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address: tuple[str, int], config: ServiceConfig):
        super().__init__(address, _Handler)
        self.service = ProofService(config)


def make_server(
    config: ServiceConfig, host: str = "127.0.0.1", port: int = 0
) -> ProofServer:
    """Bind a server; port 0 picks a free ephemeral port (see .server_address)."""
    return ProofServer((host, port), config)

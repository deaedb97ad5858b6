"""A local stand-in for an OpenAI-compatible chat endpoint.

Replays a queue of canned replies (or calls a responder function) and records
every request, so offline tests can check request bodies, headers and retry
behavior.

    with MockChatServer(['{"action": "Cooperate", "reason": "x"}']) as srv:
        client = ChatClient(srv.url, "mock-model", api_key_env_var=None)
"""

from __future__ import annotations

import json
import threading
from collections import deque
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Callable, Iterable


@dataclass
class RecordedRequest:
    path: str
    headers: dict[str, str]
    body: dict
    raw: bytes


@dataclass
class Reply:
    """A canned reply; ``status != 200`` simulates a backend error."""
    content: str = ""
    status: int = 200


def _completion(content: str, model: str) -> dict:
    return {
        "id": "chatcmpl-mock",
        "object": "chat.completion",
        "model": model,
        "choices": [{"index": 0, "message": {"role": "assistant", "content": content},
                     "finish_reason": "stop"}],
    }


class MockChatServer:
    def __init__(self, replies: Iterable[str | Reply] = (),
                 responder: Callable[[dict], str | Reply] | None = None, repeat_last: bool = False):
        self._queue: deque[Reply] = deque(r if isinstance(r, Reply) else Reply(r) for r in replies)
        self._responder = responder
        self._repeat_last = repeat_last
        self._last: Reply | None = None
        self.requests: list[RecordedRequest] = []
        self._lock = threading.Lock()
        self._server: ThreadingHTTPServer | None = None
        self._thread: threading.Thread | None = None

    @classmethod
    def from_transcript(cls, path: str | Path, **kwargs) -> "MockChatServer":
        """Replies taken from a JSONL transcript, one ``{"content": ..., "status": ...}`` per line."""
        replies = []
        with Path(path).open(encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    d = json.loads(line)
                    replies.append(Reply(d.get("content", ""), d.get("status", 200)))
        return cls(replies, **kwargs)

    def _next_reply(self, body: dict) -> Reply:
        with self._lock:
            if self._queue:
                self._last = self._queue.popleft()
                return self._last
            if self._repeat_last and self._last is not None:
                return self._last
        if self._responder is not None:
            r = self._responder(body)
            return r if isinstance(r, Reply) else Reply(r)
        return Reply("mock server has no reply queued", status=503)

    def _handler(self):
        server = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                raw = self.rfile.read(int(self.headers.get("Content-Length", 0)))
                try:
                    body = json.loads(raw)
                except ValueError:
                    body = {}
                with server._lock:
                    server.requests.append(RecordedRequest(self.path, dict(self.headers), body, raw))
                if not self.path.endswith("/chat/completions"):
                    self.send_error(404)
                    return
                reply = server._next_reply(body)
                if reply.status == 200:
                    payload = json.dumps(_completion(reply.content, body.get("model", ""))).encode()
                else:
                    payload = json.dumps({"error": {"message": reply.content}}).encode()
                self.send_response(reply.status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def log_message(self, *args):
                pass

        return Handler

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}/v1"

    def start(self) -> "MockChatServer":
        self._server = ThreadingHTTPServer(("127.0.0.1", 0), self._handler())
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
            self._server = None

    def __enter__(self) -> "MockChatServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()

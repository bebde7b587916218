"""HTTP front of a running pipeline.

JSON request/response bodies over HTTP/1.1; live tails are chunked
event-stream frames, one "event: <name>\ndata: <json>\n\n" per update.
The server only reads pipeline state and registers subscribers; all
mutation stays with the pipeline's own stages.

Routes:
    POST  /channels                stored query -> channel
    PATCH /channels/{id}           replace filter controls
    GET   /channels/{id}/tail      historical matches, then live
    GET   /clusters/{id}           one enriched snapshot
    GET   /search?q=...&page=...   paged query over serving store
    GET   /feeds/{profile}/tail    live feed items
    GET   /metrics                 counters and latency percentiles
    GET   /ui/...                  static console assets, when configured
"""

from __future__ import annotations

import json
import mimetypes
import queue
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional
from urllib.parse import parse_qs, urlsplit

from newswire.pipeline import Pipeline
from newswire.query import QueryParseError

TAIL_POLL_S = 0.25


class ApiServer:
    def __init__(self, pipeline: Pipeline, host: str = "127.0.0.1",
                 port: int = 0, static_dir: Optional[str] = None):
        self.pipeline = pipeline
        self.static_dir = Path(static_dir).resolve() if static_dir else None
        handler = _make_handler(self)
        self.httpd = ThreadingHTTPServer((host, port), handler)
        self.httpd.daemon_threads = True
        self._thread: Optional[threading.Thread] = None
        self._closing = threading.Event()

    @property
    def port(self) -> int:
        return self.httpd.server_address[1]

    @property
    def address(self) -> str:
        host, port = self.httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> None:
        self._thread = threading.Thread(target=self.httpd.serve_forever,
                                        kwargs={"poll_interval": 0.1},
                                        daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._closing.set()
        self.httpd.shutdown()
        if self._thread:
            self._thread.join(timeout=5)
        self.httpd.server_close()


def _make_handler(api: ApiServer):
    pipe = api.pipeline

    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # quiet; metrics covers traffic
            pass

        # ------------------------------------------------------ plumbing

        def _json(self, status: int, obj) -> None:
            body = json.dumps(obj).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _error(self, status: int, message: str, **extra) -> None:
            self._json(status, {"error": message, **extra})

        def _body(self) -> dict:
            n = int(self.headers.get("Content-Length") or 0)
            raw = self.rfile.read(n) if n else b"{}"
            return json.loads(raw or b"{}")

        def _start_stream(self) -> None:
            self.send_response(200)
            self.send_header("Content-Type", "text/event-stream")
            self.send_header("Cache-Control", "no-cache")
            self.send_header("Transfer-Encoding", "chunked")
            self.end_headers()

        def _chunk(self, data: bytes) -> None:
            self.wfile.write(f"{len(data):x}\r\n".encode() + data + b"\r\n")
            self.wfile.flush()

        def _frame(self, event: str, obj) -> None:
            payload = f"event: {event}\ndata: {json.dumps(obj)}\n\n"
            self._chunk(payload.encode())

        def _end_stream(self) -> None:
            try:
                self.wfile.write(b"0\r\n\r\n")
                self.wfile.flush()
            except OSError:
                pass

        def _stream(self, sub_hub, want, historical, event_name) -> None:
            """Historical frames first, then the live subscription. Query
            params: limit (stop after N live frames), idle (seconds without
            traffic before the stream ends; 0 waits forever)."""
            params = self._params
            limit = int(params.get("limit", ["0"])[0])
            idle = float(params.get("idle", ["0"])[0])
            q = sub_hub.subscribe(want)
            try:
                self._start_stream()
                for blob in historical:
                    self._frame(event_name, blob)
                sent = 0
                waited = 0.0
                while not api._closing.is_set():
                    try:
                        payload = q.get(timeout=TAIL_POLL_S)
                    except queue.Empty:
                        waited += TAIL_POLL_S
                        if idle and waited >= idle:
                            break
                        continue
                    waited = 0.0
                    self._frame(event_name, payload)
                    sent += 1
                    if limit and sent >= limit:
                        break
                self._end_stream()
            except (BrokenPipeError, ConnectionResetError):
                pass
            finally:
                sub_hub.unsubscribe(q)
                self.close_connection = True

        # -------------------------------------------------------- routes

        def do_POST(self):
            path = urlsplit(self.path).path
            if path == "/channels":
                try:
                    body = self._body()
                except json.JSONDecodeError:
                    return self._error(400, "request body is not JSON")
                query = body.get("query")
                if not isinstance(query, str):
                    return self._error(400, "missing query string")
                try:
                    ch = pipe.create_channel(query, body.get("filters"))
                except QueryParseError as e:
                    return self._error(400, e.message, position=e.position)
                except ValueError as e:
                    return self._error(400, str(e))
                return self._json(201, ch.to_json())
            self._error(404, "no such route")

        def do_PATCH(self):
            path = urlsplit(self.path).path
            parts = path.strip("/").split("/")
            if len(parts) == 2 and parts[0] == "channels":
                if parts[1] not in pipe.channels:
                    return self._error(404, f"unknown channel {parts[1]}")
                try:
                    body = self._body()
                    ch = pipe.update_channel(parts[1], body.get("filters", {}))
                except (json.JSONDecodeError, ValueError) as e:
                    return self._error(400, str(e))
                return self._json(200, ch.to_json())
            self._error(404, "no such route")

        def do_GET(self):
            split = urlsplit(self.path)
            path = split.path
            self._params = parse_qs(split.query)
            parts = path.strip("/").split("/")

            if path == "/metrics":
                return self._json(200, pipe.metrics.report())

            if len(parts) == 2 and parts[0] == "clusters":
                with pipe.serving_lock:
                    blob = pipe.serving.get(parts[1])
                if blob is None:
                    return self._error(404, f"unknown cluster {parts[1]}")
                return self._json(200, blob)

            if path == "/search":
                q = self._params.get("q", [""])[0]
                if not q:
                    return self._error(400, "missing q parameter")
                page = int(self._params.get("page", ["0"])[0])
                try:
                    return self._json(200, pipe.search(q, page))
                except QueryParseError as e:
                    return self._error(400, e.message, position=e.position)

            if len(parts) == 3 and parts[0] == "channels" and parts[2] == "tail":
                ch = pipe.channels.get(parts[1])
                if ch is None:
                    return self._error(404, f"unknown channel {parts[1]}")
                historical = pipe.channel_matches(ch.id)
                return self._stream(pipe.hub, ch.matches, historical, "cluster")

            if len(parts) == 2 and parts[0] == "channels":
                ch = pipe.channels.get(parts[1])
                if ch is None:
                    return self._error(404, f"unknown channel {parts[1]}")
                return self._json(200, ch.to_json())

            if len(parts) == 3 and parts[0] == "feeds" and parts[2] == "tail":
                name = parts[1]
                composer = pipe.composers.get(name)
                if composer is None:
                    return self._error(404, f"unknown feed profile {name}")
                historical = [{"profile": name, "item": row["item"]}
                              for row in composer.log]
                return self._stream(pipe.feed_hub, lambda k: k == name,
                                    historical, "item")

            if api.static_dir and (path == "/" or parts[0] == "ui"):
                return self._static(parts)

            self._error(404, "no such route")

        def _static(self, parts: list[str]) -> None:
            rel = "/".join(parts[1:]) if parts and parts[0] == "ui" else ""
            target = (api.static_dir / (rel or "index.html")).resolve()
            if not target.is_relative_to(api.static_dir) or not target.is_file():
                return self._error(404, "no such asset")
            body = target.read_bytes()
            ctype = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
            self.send_response(200)
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

    return Handler

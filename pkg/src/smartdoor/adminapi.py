"""Admin HTTP API: the surface the operator console talks to.

JSON bodies, X-Admin-Token on every request, and a newline-delimited
JSON event stream with since_seq resume so a reconnecting console never
loses or duplicates events.
"""

from __future__ import annotations

import json
import threading
import urllib.parse
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .controller import DoorController
from .errors import (CaptureFailed, NoFaceFound, RecognitionUnavailable,
                     SmartDoorError, Unauthorized)


class _AdminHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "smartdoor-admin"

    def log_message(self, *args):
        pass

    @property
    def controller(self) -> DoorController:
        return self.server.controller  # type: ignore[attr-defined]

    def _cors(self):
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Headers", "X-Admin-Token, Content-Type")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS")

    def _send(self, status: int, body, chunked: bool = False):
        data = json.dumps(body).encode("utf-8")
        self.send_response(status)
        self._cors()
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _error(self, status: int, code: str, message: str):
        self._send(status, {"code": code, "message": message})

    def _json_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if length == 0:
            return {}
        try:
            doc = json.loads(self.rfile.read(length).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            raise SmartDoorError("body is not valid JSON")
        if not isinstance(doc, dict):
            raise SmartDoorError("body must be a JSON object")
        return doc

    def _token(self) -> str:
        return self.headers.get("X-Admin-Token") or ""

    def _authorized(self) -> bool:
        return self._token() == self.controller.config.admin_token

    def do_OPTIONS(self):
        self.send_response(204)
        self._cors()
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")

    def do_DELETE(self):
        self._dispatch("DELETE")

    def _dispatch(self, method: str):
        parsed = urllib.parse.urlparse(self.path)
        parts = [p for p in parsed.path.split("/") if p]
        query = urllib.parse.parse_qs(parsed.query)
        if not self._authorized():
            self._error(401, "Unauthorized", "missing or wrong X-Admin-Token")
            return
        try:
            self._route(method, parts, query)
        except Unauthorized as e:
            self._error(401, "Unauthorized", str(e))
        except (NoFaceFound, CaptureFailed) as e:
            self._error(400, "NoFaceFound", str(e))
        except RecognitionUnavailable as e:
            self._error(502, "BadRequest", str(e))
        except SmartDoorError as e:
            self._error(400, getattr(e, "code", "BadRequest"), str(e))
        except (KeyError, ValueError, TypeError) as e:
            self._error(400, "BadRequest", str(e))

    def _route(self, method: str, parts: list[str], query: dict):
        ctl = self.controller
        token = self._token()
        if method == "GET" and parts == ["api", "state"]:
            self._send(200, ctl.state_snapshot())
        elif method == "GET" and parts == ["api", "events"]:
            since = int(query.get("since_seq", ["0"])[0])
            self._send(200, [json.loads(e.to_json_line())
                             for e in ctl.log.since(since)])
        elif method == "GET" and parts == ["api", "events", "stream"]:
            self._stream(int(query.get("since_seq", ["0"])[0]))
        elif method == "POST" and parts == ["api", "unlock"]:
            doc = self._json_body()
            duration = doc.get("duration")
            if duration is not None:
                duration = float(duration)
            ctl.remote_unlock(token, duration)
            self._send(200, ctl.state_snapshot())
        elif method == "POST" and parts == ["api", "enroll"]:
            doc = self._json_body()
            pid = ctl.enroll(token, doc["name"], doc["role"],
                             doc.get("guest_expires_at"))
            self._send(200, {"person_id": pid})
        elif method == "GET" and parts == ["api", "persons"]:
            self._send(200, ctl.list_persons(token))
        elif method == "DELETE" and len(parts) == 3 and parts[:2] == ["api", "persons"]:
            ctl.delete_person(token, parts[2])
            self._send(200, {})
        elif method == "POST" and parts == ["api", "doorbell"]:
            decision = ctl.press_doorbell()
            if decision is None:
                self._send(200, {"accepted": False})
            else:
                self._send(200, {"accepted": True,
                                 "outcome": decision.outcome.value,
                                 "reason": decision.reason.value})
        else:
            self._error(404, "BadRequest", f"no route for {method} {self.path}")

    def _stream(self, since_seq: int):
        self.send_response(200)
        self._cors()
        self.send_header("Content-Type", "application/x-ndjson")
        self.send_header("Cache-Control", "no-cache")
        self.send_header("Connection", "close")
        self.end_headers()
        cursor = since_seq
        log = self.controller.log
        try:
            while not self.server.stopping:  # type: ignore[attr-defined]
                events = log.wait_beyond(cursor, timeout=0.25)
                for ev in events:
                    self.wfile.write((ev.to_json_line() + "\n").encode("utf-8"))
                    cursor = ev.sequence_no
                if events:
                    self.wfile.flush()
        except (BrokenPipeError, ConnectionResetError):
            pass


class AdminApiServer:
    def __init__(self, controller: DoorController,
                 host: str = "127.0.0.1", port: int = 0):
        self.controller = controller
        self.httpd = ThreadingHTTPServer((host, port), _AdminHandler)
        self.httpd.controller = controller  # type: ignore[attr-defined]
        self.httpd.stopping = False  # type: ignore[attr-defined]
        self.httpd.daemon_threads = True
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)

    @property
    def endpoint(self) -> str:
        host, port = self.httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "AdminApiServer":
        self._thread.start()
        return self

    def stop(self):
        self.httpd.stopping = True  # type: ignore[attr-defined]
        self.httpd.shutdown()
        self.httpd.server_close()

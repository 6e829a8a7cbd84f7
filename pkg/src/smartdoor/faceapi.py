"""HTTP recognition service: person groups, detect, identify.

The endpoint shapes imitate the cloud face-API person-group model so the
controller would port to the real thing: JSON bodies everywhere except
image uploads, which are raw PGM bytes. A single API key (header
X-Api-Key) guards every route. The server is a thin adapter over
`store` and `vision`; group mutations are serialized under one lock.
"""

from __future__ import annotations

import json
import os
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from . import store, vision
from .errors import (DegenerateDescriptor, FaceIdExpired, InvalidImage,
                     NoFaceFound, NotTrained, PersonWithoutFace,
                     RoleExpiryMismatch, SmartDoorError, UnknownPerson)
from .model import Clock, RealClock, Role

GROUP_ID_RE = re.compile(r"^[a-z0-9_-]{1,64}$")

_STATUS_FOR = {
    "InvalidImage": 400, "NoFaceFound": 400, "UnknownPerson": 404,
    "NotTrained": 400, "FaceIdExpired": 400, "Unauthorized": 401,
    "BadRequest": 400, "PersonWithoutFace": 400,
}


class FaceApiService:
    """Protocol-independent core: route handlers call these methods."""

    def __init__(self, clock: Clock | None = None, face_id_ttl: float = 600.0,
                 detection_area_fraction_min: float = 0.01,
                 store_path: str | None = None, persisted_group_id: str | None = None):
        self.clock = clock or RealClock()
        self.groups: dict[str, store.PersonGroup] = {}
        self.handles = store.FaceHandleRegistry(self.clock, face_id_ttl)
        self.min_area = detection_area_fraction_min
        self.store_path = store_path
        self.persisted_group_id = persisted_group_id
        self.lock = threading.RLock()
        if store_path and persisted_group_id and os.path.exists(store_path):
            group = store.load(store_path)
            self.groups[group.group_id] = group

    def _checkpoint(self, group: store.PersonGroup):
        if self.store_path and group.group_id == self.persisted_group_id:
            store.persist(group, self.store_path)

    def _group(self, group_id: str) -> store.PersonGroup:
        group = self.groups.get(group_id)
        if group is None:
            raise UnknownPerson(f"person group {group_id!r} does not exist")
        return group

    def create_group(self, group_id: str) -> None:
        with self.lock:
            if group_id not in self.groups:
                self.groups[group_id] = store.PersonGroup(group_id)
                self._checkpoint(self.groups[group_id])

    def create_person(self, group_id: str, name: str, role: str,
                      guest_expires_at=None) -> str:
        with self.lock:
            group = self._group(group_id)
            pid = group.add_person(name, Role(role), guest_expires_at,
                                   enrolled_at=self.clock.now_ms())
            self._checkpoint(group)
            return pid

    def add_face(self, group_id: str, person_id: str, pgm_bytes: bytes) -> str:
        with self.lock:
            group = self._group(group_id)
            image = vision.decode_pgm(pgm_bytes)
            face_id = group.add_face(person_id, image, self.min_area)
            self._checkpoint(group)
            return face_id

    def train(self, group_id: str) -> None:
        with self.lock:
            group = self._group(group_id)
            group.train()
            self._checkpoint(group)

    def training_status(self, group_id: str) -> str | None:
        with self.lock:
            return self._group(group_id).train_status

    def detect(self, pgm_bytes: bytes) -> list[dict]:
        image = vision.decode_pgm(pgm_bytes)
        try:
            box = vision.detect_face(image, self.min_area)
        except NoFaceFound:
            return []
        descriptor = vision.extract_descriptor(vision.crop(image, box))
        with self.lock:
            handle = self.handles.register(descriptor, box)
        return [{"face_id": handle.face_id, "face_rectangle": handle.box.to_payload()}]

    def identify(self, face_ids: list[str], group_id: str,
                 max_candidates: int, threshold: float) -> list[dict]:
        with self.lock:
            group = self._group(group_id)
            results = []
            for face_id in face_ids:
                handle = self.handles.lookup(face_id)
                if handle is None:
                    raise FaceIdExpired(f"face id {face_id} expired or unknown")
                candidates = group.identify(handle.descriptor, threshold, max_candidates)
                results.append({
                    "face_id": face_id,
                    "candidates": [{"person_id": c.person_id, "confidence": c.confidence}
                                   for c in candidates],
                })
            return results

    def list_persons(self, group_id: str) -> list[dict]:
        with self.lock:
            group = self._group(group_id)
            return [self._person_doc(p) for p in group.persons.values()]

    def get_person(self, group_id: str, person_id: str) -> dict:
        with self.lock:
            return self._person_doc(self._group(group_id).get_person(person_id))

    def delete_person(self, group_id: str, person_id: str) -> None:
        with self.lock:
            group = self._group(group_id)
            group.delete_person(person_id)
            self._checkpoint(group)

    @staticmethod
    def _person_doc(p) -> dict:
        doc = {"person_id": p.person_id, "name": p.name, "role": p.role.value,
               "enrolled_at": p.enrolled_at, "face_count": len(p.descriptors)}
        if p.guest_expires_at is not None:
            doc["guest_expires_at"] = p.guest_expires_at
        return doc


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "smartdoor-faceapi"

    def log_message(self, *args):  # quiet by default
        pass

    # -- plumbing

    def _send(self, status: int, body: dict | list):
        data = json.dumps(body).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _error(self, status: int, code: str, message: str):
        self._send(status, {"code": code, "message": message})

    def _body(self) -> bytes:
        length = int(self.headers.get("Content-Length") or 0)
        return self.rfile.read(length)

    def _json_body(self) -> dict:
        try:
            doc = json.loads(self._body().decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            raise SmartDoorError("request body is not valid JSON")
        if not isinstance(doc, dict):
            raise SmartDoorError("request body must be a JSON object")
        return doc

    def _authorized(self) -> bool:
        return self.headers.get("X-Api-Key") == self.server.api_key  # type: ignore[attr-defined]

    def _dispatch(self, method: str):
        if not self._authorized():
            self._error(401, "Unauthorized", "missing or wrong X-Api-Key")
            return
        svc: FaceApiService = self.server.service  # type: ignore[attr-defined]
        path = self.path.split("?", 1)[0]
        parts = [p for p in path.split("/") if p]
        try:
            self._route(method, parts, svc)
        except SmartDoorError as e:
            code = getattr(e, "code", "BadRequest")
            self._error(_STATUS_FOR.get(code, 400), code, str(e))
        except (ValueError, KeyError, TypeError) as e:
            self._error(400, "BadRequest", str(e))

    def _route(self, method: str, parts: list[str], svc: FaceApiService):
        if method == "PUT" and len(parts) == 2 and parts[0] == "persongroups":
            if not GROUP_ID_RE.match(parts[1]):
                self._error(400, "BadRequest", "group id must match [a-z0-9_-]{1,64}")
                return
            svc.create_group(parts[1])
            self._send(200, {"group_id": parts[1]})
        elif method == "POST" and len(parts) == 3 and parts[0] == "persongroups" \
                and parts[2] == "persons":
            doc = self._json_body()
            role = doc["role"]
            if role not in (r.value for r in Role):
                raise SmartDoorError(f"unknown role {role!r}")
            pid = svc.create_person(parts[1], doc["name"], role,
                                    doc.get("guest_expires_at"))
            self._send(200, {"person_id": pid})
        elif method == "POST" and len(parts) == 5 and parts[0] == "persongroups" \
                and parts[2] == "persons" and parts[4] == "persistedfaces":
            face_id = svc.add_face(parts[1], parts[3], self._body())
            self._send(200, {"persisted_face_id": face_id})
        elif method == "POST" and len(parts) == 3 and parts[0] == "persongroups" \
                and parts[2] == "train":
            svc.train(parts[1])
            self._send(202, {"status": "accepted"})
        elif method == "GET" and len(parts) == 3 and parts[0] == "persongroups" \
                and parts[2] == "training":
            status = svc.training_status(parts[1])
            if status is None:
                self._error(404, "UnknownPerson", "group has never been trained")
            else:
                self._send(200, {"status": status})
        elif method == "GET" and len(parts) == 3 and parts[0] == "persongroups" \
                and parts[2] == "persons":
            self._send(200, svc.list_persons(parts[1]))
        elif method == "GET" and len(parts) == 4 and parts[0] == "persongroups" \
                and parts[2] == "persons":
            self._send(200, svc.get_person(parts[1], parts[3]))
        elif method == "DELETE" and len(parts) == 4 and parts[0] == "persongroups" \
                and parts[2] == "persons":
            svc.delete_person(parts[1], parts[3])
            self._send(200, {})
        elif method == "POST" and parts == ["detect"]:
            self._send(200, svc.detect(self._body()))
        elif method == "POST" and parts == ["identify"]:
            doc = self._json_body()
            self._send(200, svc.identify(
                doc["face_ids"], doc["person_group_id"],
                int(doc.get("max_candidates", 1)),
                float(doc.get("confidence_threshold", 0.0))))
        else:
            self._error(404, "BadRequest", f"no route for {method} {self.path}")

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")

    def do_PUT(self):
        self._dispatch("PUT")

    def do_DELETE(self):
        self._dispatch("DELETE")


class FaceApiServer:
    """Owns the HTTP listener thread around a FaceApiService."""

    def __init__(self, service: FaceApiService, api_key: str,
                 host: str = "127.0.0.1", port: int = 0):
        self.service = service
        self.httpd = ThreadingHTTPServer((host, port), _Handler)
        self.httpd.service = service  # type: ignore[attr-defined]
        self.httpd.api_key = api_key  # type: ignore[attr-defined]
        self.httpd.daemon_threads = True
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)

    @property
    def endpoint(self) -> str:
        host, port = self.httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "FaceApiServer":
        self._thread.start()
        return self

    def stop(self):
        self.httpd.shutdown()
        self.httpd.server_close()

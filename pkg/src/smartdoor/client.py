"""HTTP client for the recognition service.

Policy: 2 s timeout per request, one retry on connection failure or 5xx,
never on 4xx. Exhausted retries surface as RecognitionUnavailable so the
controller can fail secure. 4xx bodies ({code, message}) are re-raised as
the matching domain exception.
"""

from __future__ import annotations

import json
import urllib.error
import urllib.request

from . import errors
from .errors import RecognitionUnavailable, SmartDoorError

_CODE_TO_ERROR = {
    "InvalidImage": errors.InvalidImage,
    "NoFaceFound": errors.NoFaceFound,
    "UnknownPerson": errors.UnknownPerson,
    "NotTrained": errors.NotTrained,
    "FaceIdExpired": errors.FaceIdExpired,
    "Unauthorized": errors.Unauthorized,
    "PersonWithoutFace": errors.PersonWithoutFace,
    "BadRequest": SmartDoorError,
}

REQUEST_TIMEOUT = 2.0
MAX_ATTEMPTS = 2


class FaceApiClient:
    def __init__(self, endpoint: str, api_key: str,
                 timeout: float = REQUEST_TIMEOUT):
        self.endpoint = endpoint.rstrip("/")
        self.api_key = api_key
        self.timeout = timeout

    def _call(self, method: str, path: str, body: bytes = b"",
              content_type: str = "application/json"):
        url = self.endpoint + path
        last = None
        for attempt in range(MAX_ATTEMPTS):
            req = urllib.request.Request(url, data=body or None, method=method)
            req.add_header("X-Api-Key", self.api_key)
            if body:
                req.add_header("Content-Type", content_type)
            try:
                with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                    return json.loads(resp.read().decode("utf-8"))
            except urllib.error.HTTPError as e:
                if e.code >= 500:
                    last = e
                    continue
                try:
                    doc = json.loads(e.read().decode("utf-8"))
                except (ValueError, UnicodeDecodeError):
                    doc = {"code": "BadRequest", "message": f"http {e.code}"}
                exc_type = _CODE_TO_ERROR.get(doc.get("code"), SmartDoorError)
                raise exc_type(doc.get("message", ""))
            except (urllib.error.URLError, ConnectionError, TimeoutError, OSError) as e:
                last = e
                continue
        raise RecognitionUnavailable(f"{method} {url}: {last}")

    def _json(self, method: str, path: str, doc: dict):
        return self._call(method, path, json.dumps(doc).encode("utf-8"))

    # -- endpoint mirrors

    def create_group(self, group_id: str) -> None:
        self._call("PUT", f"/persongroups/{group_id}")

    def create_person(self, group_id: str, name: str, role: str,
                      guest_expires_at: int | None = None) -> str:
        doc = {"name": name, "role": role}
        if guest_expires_at is not None:
            doc["guest_expires_at"] = guest_expires_at
        return self._json("POST", f"/persongroups/{group_id}/persons", doc)["person_id"]

    def add_face(self, group_id: str, person_id: str, pgm_bytes: bytes) -> str:
        return self._call(
            "POST", f"/persongroups/{group_id}/persons/{person_id}/persistedfaces",
            pgm_bytes, content_type="application/octet-stream")["persisted_face_id"]

    def train(self, group_id: str) -> None:
        self._call("POST", f"/persongroups/{group_id}/train")

    def training_status(self, group_id: str) -> str:
        return self._call("GET", f"/persongroups/{group_id}/training")["status"]

    def detect(self, pgm_bytes: bytes) -> list[dict]:
        return self._call("POST", "/detect", pgm_bytes,
                          content_type="application/octet-stream")

    def identify(self, face_ids: list[str], group_id: str,
                 max_candidates: int, threshold: float) -> list[dict]:
        return self._json("POST", "/identify", {
            "face_ids": face_ids, "person_group_id": group_id,
            "max_candidates": max_candidates, "confidence_threshold": threshold})

    def list_persons(self, group_id: str) -> list[dict]:
        return self._call("GET", f"/persongroups/{group_id}/persons")

    def get_person(self, group_id: str, person_id: str) -> dict:
        return self._call("GET", f"/persongroups/{group_id}/persons/{person_id}")

    def delete_person(self, group_id: str, person_id: str) -> None:
        self._call("DELETE", f"/persongroups/{group_id}/persons/{person_id}")

"""The door's brain: capture -> detect -> identify -> decide -> actuate.

One lock serializes every input (doorbell, admin commands, clock ticks),
so no privileged operation runs concurrently with another. Every failure
mode ends in a DENY decision; only an explicit grant (or remote unlock)
energizes the relay, and every unlock carries a finite relock deadline.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from . import vision
from .client import FaceApiClient
from .errors import (CaptureFailed, InvalidImage, NoFaceFound,
                     RecognitionUnavailable, RoleExpiryMismatch,
                     PersonWithoutFace, SmartDoorError, Unauthorized)
from .hardware import CameraSource, Doorbell, RelaySolenoid
from .model import (Clock, EventKind, EventLog, Role, SystemConfig)


class Outcome(str, Enum):
    GRANT = "GRANT"
    DENY = "DENY"


class DenyReason(str, Enum):
    MATCHED = "Matched"
    BELOW_THRESHOLD = "BelowThreshold"
    NO_FACE = "NoFace"
    GUEST_EXPIRED = "GuestExpired"
    BLACKLISTED = "Blacklisted"
    RECOGNITION_UNAVAILABLE = "RecognitionUnavailable"


@dataclass(frozen=True)
class AccessDecision:
    outcome: Outcome
    reason: DenyReason
    person_id: Optional[str] = None
    confidence: Optional[float] = None


@dataclass(frozen=True)
class LockState:
    locked: bool
    relock_at: Optional[int] = None  # present iff unlocked


class DoorController:
    def __init__(self, config: SystemConfig, clock: Clock,
                 camera: CameraSource, relay: RelaySolenoid,
                 api: FaceApiClient, log: EventLog,
                 doorbell: Optional[Doorbell] = None):
        self.config = config
        self.clock = clock
        self.camera = camera
        self.relay = relay
        self.api = api
        self.log = log
        self.doorbell = doorbell or Doorbell(clock)
        self.state = LockState(locked=True)
        self._lock = threading.RLock()

    # -- doorbell pipeline

    def press_doorbell(self) -> Optional[AccessDecision]:
        """Debounced entry point; returns None for a dropped press."""
        with self._lock:
            if not self.doorbell.press():
                return None
            return self.handle_doorbell()

    def handle_doorbell(self) -> AccessDecision:
        with self._lock:
            self.log.append(EventKind.DOORBELL_PRESSED)
            try:
                frame = self.camera.capture()
            except CaptureFailed:
                self.log.append(EventKind.NO_FACE_FOUND, {"cause": "capture_failed"})
                return self._deny(DenyReason.NO_FACE)
            self.log.append(EventKind.FRAME_CAPTURED,
                            {"width": frame.width, "height": frame.height})
            try:
                box = vision.detect_face(frame, self.config.detection_area_fraction_min)
            except (NoFaceFound, InvalidImage):
                self.log.append(EventKind.NO_FACE_FOUND)
                return self._deny(DenyReason.NO_FACE)
            self.log.append(EventKind.FACE_DETECTED, {"box": box.to_payload()})
            face_pgm = vision.encode_pgm(vision.crop(frame, box))

            try:
                detections = self.api.detect(face_pgm)
                if not detections:
                    return self._deny(DenyReason.BELOW_THRESHOLD)
                results = self.api.identify(
                    [detections[0]["face_id"]], self.config.person_group_id,
                    self.config.max_candidates,
                    self.config.identify_confidence_threshold)
                candidates = results[0]["candidates"]
                if not candidates:
                    return self._deny(DenyReason.BELOW_THRESHOLD)
                top = candidates[0]
                person = self.api.get_person(self.config.person_group_id,
                                             top["person_id"])
            except RecognitionUnavailable:
                return self._deny(DenyReason.RECOGNITION_UNAVAILABLE)
            except SmartDoorError:
                # protocol-level failure (untrained group, expired handle, ...):
                # the service cannot answer, so fail secure
                return self._deny(DenyReason.RECOGNITION_UNAVAILABLE)

            pid, name, conf = person["person_id"], person["name"], top["confidence"]
            self.log.append(EventKind.IDENTIFIED,
                            {"person_id": pid, "name": name, "confidence": conf})
            role = Role(person["role"])
            if role == Role.BLACKLISTED:
                self.log.append(EventKind.BLACKLIST_ALERT,
                                {"person_id": pid, "name": name,
                                 "message": f"blacklisted person {name} at the door"})
                return self._deny(DenyReason.BLACKLISTED, pid, conf)
            if role == Role.GUEST and self.clock.now_ms() >= person["guest_expires_at"]:
                self.log.append(EventKind.GUEST_EXPIRED,
                                {"person_id": pid, "name": name,
                                 "guest_expires_at": person["guest_expires_at"]})
                return self._deny(DenyReason.GUEST_EXPIRED, pid, conf)
            return self._grant(pid, name, conf)

    def _deny(self, reason: DenyReason, person_id: Optional[str] = None,
              confidence: Optional[float] = None) -> AccessDecision:
        payload = {"reason": reason.value}
        if person_id is not None:
            payload["person_id"] = person_id
        self.log.append(EventKind.ACCESS_DENIED, payload)
        return AccessDecision(Outcome.DENY, reason, person_id, confidence)

    def _grant(self, person_id: str, name: str,
               confidence: Optional[float]) -> AccessDecision:
        self.log.append(EventKind.GREETING, {"text": f"welcome {name}"})
        payload = {"person_id": person_id, "name": name}
        if confidence is not None:
            payload["confidence"] = confidence
        self.log.append(EventKind.ACCESS_GRANTED, payload)
        self._unlock(int(self.config.relock_timeout * 1000))
        return AccessDecision(Outcome.GRANT, DenyReason.MATCHED,
                              person_id, confidence)

    # -- lock state machine

    def _unlock(self, hold_ms: int) -> None:
        now = self.clock.now_ms()
        relock_at = now + hold_ms
        if not self.state.locked and self.state.relock_at is not None:
            relock_at = max(relock_at, self.state.relock_at)  # latest grant wins
        self.relay.set_relay(True)
        self.state = LockState(locked=False, relock_at=relock_at)
        self.log.append(EventKind.DOOR_UNLOCKED, {"relock_at": relock_at})

    def tick(self) -> bool:
        """Relock when the deadline has passed; returns True on relock."""
        with self._lock:
            if self.state.locked or self.state.relock_at is None:
                return False
            if self.clock.now_ms() < self.state.relock_at:
                return False
            self.relay.set_relay(False)
            self.state = LockState(locked=True)
            self.log.append(EventKind.DOOR_RELOCKED)
            return True

    def next_deadline(self) -> Optional[int]:
        with self._lock:
            return None if self.state.locked else self.state.relock_at

    # -- privileged operations (single admin token)

    def _authorize(self, token: str) -> None:
        if token != self.config.admin_token:
            raise Unauthorized("bad admin token")

    def remote_unlock(self, token: str,
                      duration_s: Optional[float] = None) -> AccessDecision:
        with self._lock:
            self._authorize(token)
            hold = self.config.relock_timeout if duration_s is None else duration_s
            self.log.append(EventKind.REMOTE_UNLOCK,
                            {"duration_ms": int(hold * 1000)})
            self._unlock(int(hold * 1000))
            return AccessDecision(Outcome.GRANT, DenyReason.MATCHED,
                                  person_id="admin")

    def enroll(self, token: str, name: str, role: str,
               guest_expires_at: Optional[int] = None) -> str:
        with self._lock:
            self._authorize(token)
            if (role == Role.GUEST.value) != (guest_expires_at is not None):
                raise RoleExpiryMismatch(
                    "guest role requires guest_expires_at and vice versa")
            frame = self.camera.capture()
            box = vision.detect_face(frame, self.config.detection_area_fraction_min)
            face_pgm = vision.encode_pgm(vision.crop(frame, box))
            group = self.config.person_group_id
            self.api.create_group(group)
            person_id = self.api.create_person(group, name, role, guest_expires_at)
            try:
                self.api.add_face(group, person_id, face_pgm)
                self.api.train(group)
                while self.api.training_status(group) != "succeeded":
                    pass
            except SmartDoorError:
                self.api.delete_person(group, person_id)
                raise
            self.log.append(EventKind.USER_ENROLLED,
                            {"person_id": person_id, "name": name, "role": role})
            return person_id

    def list_persons(self, token: str) -> list[dict]:
        with self._lock:
            self._authorize(token)
            return self.api.list_persons(self.config.person_group_id)

    def delete_person(self, token: str, person_id: str) -> None:
        with self._lock:
            self._authorize(token)
            group = self.config.person_group_id
            self.api.delete_person(group, person_id)
            try:
                self.api.train(group)
            except PersonWithoutFace:
                pass  # leave untrained; identify will fail secure

    def state_snapshot(self) -> dict:
        with self._lock:
            if self.state.locked:
                return {"lock_state": "LOCKED"}
            return {"lock_state": "UNLOCKED", "relock_at": self.state.relock_at}

    def shutdown(self) -> None:
        """Fail-secure shutdown: relay de-energized before exit."""
        with self._lock:
            if not self.state.locked:
                self.relay.set_relay(False)
                self.state = LockState(locked=True)
                self.log.append(EventKind.DOOR_RELOCKED)

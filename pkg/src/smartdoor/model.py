"""Domain types, configuration, clocks and the event vocabulary.

Everything here is a plain value type; the only stateful objects are the
clocks and the append-only event log, which has a single writer (the
controller loop).
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import Any, Callable, Iterator, Optional, Sequence

from .errors import ConfigInvalid, InvalidBox

DESCRIPTOR_LEN = 256


@dataclass(frozen=True)
class GrayImage:
    """8-bit grayscale raster, row-major."""

    width: int
    height: int
    pixels: tuple[int, ...]

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")
        if len(self.pixels) != self.width * self.height:
            raise ValueError("pixel count must equal width*height")
        for p in self.pixels:
            if not (0 <= p <= 255):
                raise ValueError(f"intensity {p} outside [0,255]")

    def at(self, x: int, y: int) -> int:
        return self.pixels[y * self.width + x]


@dataclass(frozen=True)
class FaceBox:
    """Rectangular face region inside some image."""

    left: int
    top: int
    width: int
    height: int

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("box dimensions must be positive")
        if self.left < 0 or self.top < 0:
            raise ValueError("box origin must be non-negative")

    def check_within(self, image: GrayImage) -> None:
        if self.left + self.width > image.width or self.top + self.height > image.height:
            raise InvalidBox(
                f"box {self} exceeds {image.width}x{image.height} image bounds"
            )

    def to_payload(self) -> dict:
        return {"left": self.left, "top": self.top,
                "width": self.width, "height": self.height}


@dataclass(frozen=True)
class FaceDescriptor:
    """256-component unit vector (or the all-zero degenerate descriptor)."""

    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != DESCRIPTOR_LEN:
            raise ValueError(f"descriptor must have {DESCRIPTOR_LEN} components")

    @property
    def degenerate(self) -> bool:
        return all(v == 0.0 for v in self.values)


class Role(str, Enum):
    RESIDENT = "resident"
    GUEST = "guest"
    BLACKLISTED = "blacklisted"


@dataclass
class PersonRecord:
    person_id: str
    name: str
    role: Role
    descriptors: list[FaceDescriptor] = field(default_factory=list)
    enrolled_at: int = 0
    guest_expires_at: Optional[int] = None

    def __post_init__(self):
        if (self.role == Role.GUEST) != (self.guest_expires_at is not None):
            from .errors import RoleExpiryMismatch
            raise RoleExpiryMismatch(
                "guest_expires_at is required for guests and forbidden otherwise"
            )


class EventKind(str, Enum):
    DOORBELL_PRESSED = "DoorbellPressed"
    FRAME_CAPTURED = "FrameCaptured"
    FACE_DETECTED = "FaceDetected"
    NO_FACE_FOUND = "NoFaceFound"
    IDENTIFIED = "Identified"
    ACCESS_GRANTED = "AccessGranted"
    ACCESS_DENIED = "AccessDenied"
    GUEST_EXPIRED = "GuestExpired"
    BLACKLIST_ALERT = "BlacklistAlert"
    DOOR_UNLOCKED = "DoorUnlocked"
    DOOR_RELOCKED = "DoorRelocked"
    USER_ENROLLED = "UserEnrolled"
    REMOTE_UNLOCK = "RemoteUnlock"
    GREETING = "Greeting"


@dataclass(frozen=True)
class DoorEvent:
    sequence_no: int
    timestamp: int
    kind: EventKind
    payload: dict

    def to_json_line(self) -> str:
        return json.dumps(
            {"seq": self.sequence_no, "ts_ms": self.timestamp,
             "kind": self.kind.value, "payload": self.payload},
            sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json_line(cls, line: str) -> "DoorEvent":
        raw = json.loads(line)
        return cls(raw["seq"], raw["ts_ms"], EventKind(raw["kind"]), raw["payload"])


class Clock:
    def now_ms(self) -> int:
        raise NotImplementedError


class RealClock(Clock):
    def now_ms(self) -> int:
        return int(time.time() * 1000)


class ManualClock(Clock):
    """Test clock: only moves via explicit advance/set, never backward."""

    def __init__(self, start_ms: int = 0):
        self._now = start_ms

    def now_ms(self) -> int:
        return self._now

    def advance(self, delta_ms: int) -> int:
        if delta_ms < 0:
            raise ValueError("clock cannot go backward")
        self._now += delta_ms
        return self._now

    def set(self, now_ms: int) -> int:
        if now_ms < self._now:
            raise ValueError("clock cannot go backward")
        self._now = now_ms
        return self._now


class EventLog:
    """Append-only event log with a single writer.

    Sequence numbers are gapless 1..N; timestamps are clamped so they never
    decrease even under a wall clock that does.
    """

    def __init__(self, clock: Clock, sink_path: Optional[str] = None):
        self._clock = clock
        self._events: list[DoorEvent] = []
        self._cond = threading.Condition()
        self._sink_path = sink_path
        self._last_ts = 0

    def append(self, kind: EventKind, payload: Optional[dict] = None) -> DoorEvent:
        with self._cond:
            ts = max(self._clock.now_ms(), self._last_ts)
            ev = DoorEvent(len(self._events) + 1, ts, kind, payload or {})
            self._events.append(ev)
            self._last_ts = ts
            if self._sink_path:
                with open(self._sink_path, "a", encoding="utf-8") as f:
                    f.write(ev.to_json_line() + "\n")
            self._cond.notify_all()
        return ev

    def events(self) -> list[DoorEvent]:
        with self._cond:
            return list(self._events)

    def since(self, seq: int) -> list[DoorEvent]:
        with self._cond:
            return self._events[seq:]

    def wait_beyond(self, seq: int, timeout: float) -> list[DoorEvent]:
        """Block until events past `seq` exist (or timeout); return them."""
        with self._cond:
            if len(self._events) <= seq:
                self._cond.wait(timeout)
            return self._events[seq:]

    def __len__(self) -> int:
        with self._cond:
            return len(self._events)


@dataclass
class SystemConfig:
    admin_token: str
    recognition_endpoint: str
    person_group_id: str
    api_key: str
    relock_timeout: float = 5.0
    identify_confidence_threshold: float = 0.80
    max_candidates: int = 1
    detection_area_fraction_min: float = 0.01
    solenoid_latency: int = 50
    face_id_ttl: float = 600.0
    faceapi_listen: str = "127.0.0.1:8701"
    admin_listen: str = "127.0.0.1:8700"
    event_log_path: Optional[str] = None
    store_path: Optional[str] = None
    frames_dir: Optional[str] = None

    def to_json(self) -> str:
        raw = {k: v for k, v in asdict(self).items() if v is not None}
        return json.dumps(raw, sort_keys=True, indent=2)


_REQUIRED = ("admin_token", "recognition_endpoint", "person_group_id", "api_key")


def validate_config(raw: dict) -> SystemConfig:
    """Validate a parsed flat config object and apply defaults."""
    if not isinstance(raw, dict):
        raise ConfigInvalid("<root>", "config must be a flat object")
    for key in _REQUIRED:
        if key not in raw or not isinstance(raw[key], str) or not raw[key]:
            raise ConfigInvalid(key, "required non-empty string")
    known = {f for f in SystemConfig.__dataclass_fields__}
    for key in raw:
        if key not in known:
            raise ConfigInvalid(key, "unknown field")
    cfg = SystemConfig(**raw)

    def _num(name, lo=None, hi=None, strict_lo=False):
        v = getattr(cfg, name)
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ConfigInvalid(name, "must be a number")
        if lo is not None and (v <= lo if strict_lo else v < lo):
            raise ConfigInvalid(name, f"must be {'>' if strict_lo else '>='} {lo}")
        if hi is not None and v > hi:
            raise ConfigInvalid(name, f"must be <= {hi}")

    _num("relock_timeout", lo=0, strict_lo=True)
    _num("identify_confidence_threshold", lo=0.0, hi=1.0)
    _num("detection_area_fraction_min", lo=0.0, hi=1.0)
    _num("solenoid_latency", lo=0)
    _num("face_id_ttl", lo=0, strict_lo=True)
    if not isinstance(cfg.max_candidates, int) or cfg.max_candidates < 1:
        raise ConfigInvalid("max_candidates", "must be an integer >= 1")
    return cfg


def load_config(path: str) -> SystemConfig:
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigInvalid("<file>", str(e))
    return validate_config(raw)

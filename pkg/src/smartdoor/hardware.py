"""Software model of the door circuit: relay, solenoid, doorbell, camera.

All timing runs off an injected clock so scenarios replay bit-identically.
The solenoid follows the relay with a fixed latency: each relay edge
schedules one solenoid transition at edge-time + latency.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from enum import Enum

from .errors import CaptureFailed, ScenarioError
from .model import Clock, GrayImage
from . import vision

HIGH = "HIGH"
LOW = "LOW"

DEBOUNCE_MS = 200


@dataclass
class VirtualPin:
    pin_no: int
    level: str = LOW
    history: list[tuple[int, str]] = field(default_factory=list)

    def write(self, level: str, ts: int) -> bool:
        """Record an edge; returns False when the level is unchanged."""
        if level == self.level:
            return False
        if self.history and ts < self.history[-1][0]:
            raise ValueError("pin history timestamps must be non-decreasing")
        self.level = level
        self.history.append((ts, level))
        return True


class SolenoidPosition(str, Enum):
    EXTENDED = "EXTENDED"    # bolt out, door locked
    RETRACTED = "RETRACTED"  # bolt in, door open


class RelaySolenoid:
    """Single-channel relay driving a solenoid bolt with actuation latency."""

    def __init__(self, clock: Clock, latency_ms: int = 50, pin_no: int = 17):
        self.clock = clock
        self.latency_ms = latency_ms
        self.pin = VirtualPin(pin_no)
        # (effective_ts, position); applied when the clock reaches effective_ts
        self.transitions: list[tuple[int, SolenoidPosition]] = []

    def set_relay(self, energized: bool) -> None:
        now = self.clock.now_ms()
        if not self.pin.write(HIGH if energized else LOW, now):
            return
        pos = SolenoidPosition.RETRACTED if energized else SolenoidPosition.EXTENDED
        self.transitions.append((now + self.latency_ms, pos))

    @property
    def energized(self) -> bool:
        return self.pin.level == HIGH

    def read_solenoid(self) -> SolenoidPosition:
        now = self.clock.now_ms()
        pos = SolenoidPosition.EXTENDED
        for ts, p in self.transitions:
            if ts <= now:
                pos = p
        return pos


class Doorbell:
    """Debounced push button: presses within DEBOUNCE_MS of the last
    accepted press are dropped."""

    def __init__(self, clock: Clock, debounce_ms: int = DEBOUNCE_MS):
        self.clock = clock
        self.debounce_ms = debounce_ms
        self._last_accepted: int | None = None

    def press(self) -> bool:
        now = self.clock.now_ms()
        if self._last_accepted is not None and \
                now - self._last_accepted < self.debounce_ms:
            return False
        self._last_accepted = now
        return True


class CameraSource:
    """Ordered frame queue; capture() consumes FIFO."""

    def __init__(self, frames: list[GrayImage] | None = None):
        self._frames: list[GrayImage] = list(frames or [])

    @classmethod
    def from_directory(cls, path: str) -> "CameraSource":
        frames = []
        for name in sorted(os.listdir(path)):
            if name.endswith(".pgm"):
                with open(os.path.join(path, name), "rb") as f:
                    frames.append(vision.decode_pgm(f.read()))
        return cls(frames)

    def push(self, frame: GrayImage) -> None:
        self._frames.append(frame)

    def capture(self) -> GrayImage:
        if not self._frames:
            raise CaptureFailed("camera frame queue is empty")
        return self._frames.pop(0)

    def __len__(self) -> int:
        return len(self._frames)


@dataclass(frozen=True)
class ScenarioStep:
    at_ms: int
    command: str           # "press" | "frame" | "advance"
    arg: str | int | None = None


def parse_scenario(text: str) -> list[ScenarioStep]:
    """Parse the line-oriented script format:

        at <ms> press
        at <ms> frame <path>
        at <ms> advance <ms>

    Blank lines and lines starting with # are skipped. Times must be
    non-decreasing.
    """
    steps: list[ScenarioStep] = []
    last = 0
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) < 3 or parts[0] != "at" or not parts[1].isdigit():
            raise ScenarioError(f"line {lineno}: expected 'at <ms> <command>'")
        at_ms = int(parts[1])
        if at_ms < last:
            raise ScenarioError(f"line {lineno}: time goes backward")
        last = at_ms
        cmd = parts[2]
        if cmd == "press" and len(parts) == 3:
            steps.append(ScenarioStep(at_ms, "press"))
        elif cmd == "frame" and len(parts) == 4:
            steps.append(ScenarioStep(at_ms, "frame", parts[3]))
        elif cmd == "advance" and len(parts) == 4 and parts[3].isdigit():
            steps.append(ScenarioStep(at_ms, "advance", int(parts[3])))
        else:
            raise ScenarioError(f"line {lineno}: unknown command {line!r}")
    return steps

"""Deterministic replay harness: manual clock, simulated circuit, an
in-process recognition service, and the controller, all wired together.

The clock is stepped through every relock deadline before jumping to a
scenario time, so DoorRelocked lands at exactly grant_time + timeout.
"""

from __future__ import annotations

import os

from . import vision
from .adminapi import AdminApiServer
from .client import FaceApiClient
from .controller import DoorController
from .errors import ScenarioError
from .faceapi import FaceApiServer, FaceApiService
from .hardware import CameraSource, RelaySolenoid, ScenarioStep
from .model import EventLog, ManualClock, SystemConfig


class SimHarness:
    """Everything needed to run the door against simulated hardware.

    By default the recognition service runs in-process on an ephemeral
    port with the same manual clock, overriding config.recognition_endpoint
    so scenarios stay self-contained and reproducible.
    """

    def __init__(self, config: SystemConfig, event_log_path: str | None = None,
                 own_faceapi: bool = True, with_admin_api: bool = False):
        self.config = config
        self.clock = ManualClock()
        self.camera = CameraSource()
        self.relay = RelaySolenoid(self.clock, latency_ms=config.solenoid_latency)
        self.log = EventLog(self.clock, sink_path=event_log_path)
        self.faceapi_server = None
        if own_faceapi:
            service = FaceApiService(
                clock=self.clock, face_id_ttl=config.face_id_ttl,
                detection_area_fraction_min=config.detection_area_fraction_min,
                store_path=config.store_path,
                persisted_group_id=config.person_group_id)
            service.create_group(config.person_group_id)
            self.faceapi_server = FaceApiServer(service, config.api_key).start()
            endpoint = self.faceapi_server.endpoint
        else:
            endpoint = config.recognition_endpoint
        self.api = FaceApiClient(endpoint, config.api_key)
        self.controller = DoorController(
            config, self.clock, self.camera, self.relay, self.api, self.log)
        self.admin_server = None
        if with_admin_api:
            host, _, port = config.admin_listen.partition(":")
            self.admin_server = AdminApiServer(
                self.controller, host=host, port=int(port or 0)).start()

    def advance_to(self, t_ms: int) -> None:
        """Advance the clock to t_ms, stopping at every relock deadline."""
        while True:
            deadline = self.controller.next_deadline()
            if deadline is None or deadline > t_ms:
                break
            self.clock.set(max(deadline, self.clock.now_ms()))
            self.controller.tick()
        if t_ms > self.clock.now_ms():
            self.clock.set(t_ms)
        self.controller.tick()

    def run_steps(self, steps: list[ScenarioStep], base_dir: str = ".") -> None:
        for step in steps:
            self.advance_to(step.at_ms)
            if step.command == "press":
                self.controller.press_doorbell()
            elif step.command == "frame":
                path = step.arg
                if not os.path.isabs(path):
                    path = os.path.join(base_dir, path)
                try:
                    with open(path, "rb") as f:
                        self.camera.push(vision.decode_pgm(f.read()))
                except OSError as e:
                    raise ScenarioError(f"cannot read frame {step.arg!r}: {e}")
            elif step.command == "advance":
                self.advance_to(self.clock.now_ms() + step.arg)

    def close(self) -> None:
        self.controller.shutdown()
        if self.admin_server:
            self.admin_server.stop()
        if self.faceapi_server:
            self.faceapi_server.stop()

#!/usr/bin/env python3
"""End-to-end demo on the simulated hardware: enroll a resident, ring the
doorbell with a matching frame, watch the door unlock and relock.

Usage: python3 scripts/demo_grant.py
"""

import sys

from smartdoor.hardware import SolenoidPosition
from smartdoor.model import SystemConfig
from smartdoor.scenario import SimHarness

sys.path.insert(0, "tests")
from conftest import face_frame  # noqa: E402

config = SystemConfig(
    admin_token="demo-token",
    recognition_endpoint="http://unused",
    person_group_id="home",
    api_key="demo-key",
)

harness = SimHarness(config)
try:
    harness.camera.push(face_frame(1))
    harness.controller.enroll("demo-token", "Karan", "resident")

    harness.advance_to(1000)
    harness.camera.push(face_frame(1))
    decision = harness.controller.press_doorbell()
    print(f"decision: {decision.outcome.value} ({decision.reason.value})")

    harness.advance_to(1050)
    print(f"solenoid at t=1050: {harness.relay.read_solenoid().value}")
    harness.advance_to(10_000)
    print(f"solenoid at t=10000: {harness.relay.read_solenoid().value}")
    assert harness.relay.read_solenoid() == SolenoidPosition.EXTENDED

    print("\nevent log:")
    for event in harness.log.events():
        print(" ", event.to_json_line())
finally:
    harness.close()

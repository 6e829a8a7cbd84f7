import json

import pytest
from hypothesis import given, strategies as st

from smartdoor.errors import ConfigInvalid, RoleExpiryMismatch
from smartdoor.model import (DoorEvent, EventKind, EventLog, FaceDescriptor,
                             GrayImage, ManualClock, PersonRecord, Role,
                             validate_config)

BASE = {
    "admin_token": "t", "recognition_endpoint": "http://x",
    "person_group_id": "home", "api_key": "k",
}


class TestValidateConfig:
    def test_defaults_pass_through(self):
        cfg = validate_config({**BASE, "relock_timeout": 5,
                               "identify_confidence_threshold": 0.8})
        assert cfg.relock_timeout == 5
        assert cfg.identify_confidence_threshold == 0.8
        assert cfg.max_candidates == 1
        assert cfg.solenoid_latency == 50

    def test_zero_relock_timeout_rejected(self):
        with pytest.raises(ConfigInvalid) as e:
            validate_config({**BASE, "relock_timeout": 0})
        assert e.value.field == "relock_timeout"

    def test_threshold_above_one_rejected(self):
        with pytest.raises(ConfigInvalid) as e:
            validate_config({**BASE, "identify_confidence_threshold": 1.5})
        assert e.value.field == "identify_confidence_threshold"

    def test_missing_required_field(self):
        with pytest.raises(ConfigInvalid):
            validate_config({k: v for k, v in BASE.items() if k != "admin_token"})

    def test_round_trip(self):
        cfg = validate_config({**BASE, "relock_timeout": 2.5, "max_candidates": 3})
        again = validate_config(json.loads(cfg.to_json()))
        assert again == cfg


class TestDomainTypes:
    def test_image_invariants(self):
        with pytest.raises(ValueError):
            GrayImage(2, 2, (0, 0, 0))
        with pytest.raises(ValueError):
            GrayImage(1, 1, (256,))
        with pytest.raises(ValueError):
            GrayImage(0, 1, ())

    def test_descriptor_length(self):
        with pytest.raises(ValueError):
            FaceDescriptor((0.0,) * 255)
        assert FaceDescriptor((0.0,) * 256).degenerate

    def test_guest_requires_expiry(self):
        with pytest.raises(RoleExpiryMismatch):
            PersonRecord("p1", "X", Role.GUEST)
        with pytest.raises(RoleExpiryMismatch):
            PersonRecord("p1", "X", Role.RESIDENT, guest_expires_at=5)
        PersonRecord("p1", "X", Role.GUEST, guest_expires_at=5)


class TestEventLog:
    def test_first_event_has_sequence_one(self):
        log = EventLog(ManualClock())
        ev = log.append(EventKind.DOORBELL_PRESSED)
        assert ev.sequence_no == 1

    def test_consecutive_sequence_numbers(self):
        log = EventLog(ManualClock())
        a = log.append(EventKind.DOORBELL_PRESSED)
        b = log.append(EventKind.NO_FACE_FOUND)
        assert (a.sequence_no, b.sequence_no) == (1, 2)

    def test_equal_timestamps_keep_sequence_order(self):
        clock = ManualClock(100)
        log = EventLog(clock)
        a = log.append(EventKind.DOORBELL_PRESSED)
        b = log.append(EventKind.NO_FACE_FOUND)
        assert a.timestamp == b.timestamp == 100
        assert a.sequence_no < b.sequence_no

    def test_json_line_round_trip(self):
        log = EventLog(ManualClock(42))
        ev = log.append(EventKind.GREETING, {"text": "welcome Karan"})
        assert DoorEvent.from_json_line(ev.to_json_line()) == ev

    @given(st.lists(st.integers(min_value=0, max_value=1000), max_size=40))
    def test_sequence_gapless_and_timestamps_monotone(self, advances):
        clock = ManualClock()
        log = EventLog(clock)
        for delta in advances:
            clock.advance(delta)
            log.append(EventKind.DOORBELL_PRESSED)
        events = log.events()
        assert [e.sequence_no for e in events] == list(range(1, len(events) + 1))
        for prev, cur in zip(events, events[1:]):
            assert cur.timestamp >= prev.timestamp

    def test_file_sink_appends_json_lines(self, tmp_path):
        path = tmp_path / "events.jsonl"
        log = EventLog(ManualClock(7), sink_path=str(path))
        log.append(EventKind.DOORBELL_PRESSED)
        log.append(EventKind.NO_FACE_FOUND)
        lines = path.read_text().splitlines()
        assert len(lines) == 2
        assert json.loads(lines[0])["kind"] == "DoorbellPressed"
        assert json.loads(lines[1])["seq"] == 2


class TestManualClock:
    def test_never_backward(self):
        clock = ManualClock(10)
        with pytest.raises(ValueError):
            clock.advance(-1)
        with pytest.raises(ValueError):
            clock.set(5)

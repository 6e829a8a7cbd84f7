"""Operator entry points.

Exit codes: 0 success, 2 config/usage error, 3 pipeline denial during
enroll, 4 scenario I/O error.
"""

from __future__ import annotations

import argparse
import datetime
import os
import signal
import sys
import threading
import time

from . import vision
from .adminapi import AdminApiServer
from .client import FaceApiClient
from .controller import DoorController
from .errors import (ConfigInvalid, InvalidImage, NoFaceFound,
                     RecognitionUnavailable, ScenarioError, SmartDoorError)
from .faceapi import FaceApiServer, FaceApiService
from .hardware import CameraSource, RelaySolenoid, parse_scenario
from .model import EventLog, RealClock, SystemConfig, load_config
from .scenario import SimHarness

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DENIED = 3
EXIT_SCENARIO = 4


def _load(path: str) -> SystemConfig:
    try:
        return load_config(path)
    except ConfigInvalid as e:
        print(f"ConfigInvalid: {e}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _wait_forever(stop: threading.Event):
    def handler(signum, frame):
        stop.set()
    signal.signal(signal.SIGTERM, handler)
    signal.signal(signal.SIGINT, handler)
    while not stop.is_set():
        time.sleep(0.05)


def cmd_run(args) -> int:
    config = _load(args.config)
    clock = RealClock()
    camera = (CameraSource.from_directory(config.frames_dir)
              if config.frames_dir else CameraSource())
    relay = RelaySolenoid(clock, latency_ms=config.solenoid_latency)
    log = EventLog(clock, sink_path=config.event_log_path)
    api = FaceApiClient(config.recognition_endpoint, config.api_key)
    controller = DoorController(config, clock, camera, relay, api, log)
    host, _, port = config.admin_listen.partition(":")
    server = AdminApiServer(controller, host=host, port=int(port or 0)).start()
    print(f"admin API listening on {server.endpoint}", flush=True)

    stop = threading.Event()

    def ticker():
        while not stop.is_set():
            controller.tick()
            time.sleep(0.02)

    threading.Thread(target=ticker, daemon=True).start()
    try:
        _wait_forever(stop)
    finally:
        controller.shutdown()  # relay de-energized before exit
        server.stop()
    return EXIT_OK


def cmd_faceapi(args) -> int:
    config = _load(args.config)
    service = FaceApiService(
        face_id_ttl=config.face_id_ttl,
        detection_area_fraction_min=config.detection_area_fraction_min,
        store_path=config.store_path,
        persisted_group_id=config.person_group_id)
    service.create_group(config.person_group_id)
    host, _, port = config.faceapi_listen.partition(":")
    server = FaceApiServer(service, config.api_key,
                           host=host, port=int(port or 0)).start()
    print(f"recognition service listening on {server.endpoint}", flush=True)
    stop = threading.Event()
    try:
        _wait_forever(stop)
    finally:
        server.stop()
    return EXIT_OK


def cmd_enroll(args) -> int:
    config = _load(args.config)
    if (args.role == "guest") != (args.expires is not None):
        print("--expires is required for guests and forbidden otherwise",
              file=sys.stderr)
        return EXIT_CONFIG
    expires_ms = None
    if args.expires is not None:
        try:
            dt = datetime.datetime.fromisoformat(args.expires)
        except ValueError:
            print(f"bad --expires value {args.expires!r}", file=sys.stderr)
            return EXIT_CONFIG
        expires_ms = int(dt.timestamp() * 1000)
    try:
        with open(args.image, "rb") as f:
            frame = vision.decode_pgm(f.read())
    except (OSError, InvalidImage) as e:
        print(f"cannot read image: {e}", file=sys.stderr)
        return EXIT_CONFIG

    api = FaceApiClient(config.recognition_endpoint, config.api_key)
    try:
        box = vision.detect_face(frame, config.detection_area_fraction_min)
        face_pgm = vision.encode_pgm(vision.crop(frame, box))
        api.create_group(config.person_group_id)
        person_id = api.create_person(config.person_group_id, args.name,
                                      args.role, expires_ms)
        try:
            api.add_face(config.person_group_id, person_id, face_pgm)
            api.train(config.person_group_id)
        except SmartDoorError:
            api.delete_person(config.person_group_id, person_id)
            raise
    except NoFaceFound:
        print("NoFaceFound", file=sys.stderr)
        return EXIT_DENIED
    except RecognitionUnavailable as e:
        print(f"recognition service unreachable: {e}", file=sys.stderr)
        return EXIT_DENIED
    except SmartDoorError as e:
        print(f"enrollment failed: {e}", file=sys.stderr)
        return EXIT_DENIED
    print(person_id)
    return EXIT_OK


def cmd_replay(args) -> int:
    config = _load(args.config)
    try:
        with open(args.scenario, "r", encoding="utf-8") as f:
            steps = parse_scenario(f.read())
    except OSError as e:
        print(f"cannot read scenario: {e}", file=sys.stderr)
        return EXIT_SCENARIO
    except ScenarioError as e:
        print(f"bad scenario: {e}", file=sys.stderr)
        return EXIT_SCENARIO

    harness = SimHarness(config)
    try:
        harness.run_steps(steps, base_dir=os.path.dirname(
            os.path.abspath(args.scenario)))
    except ScenarioError as e:
        print(f"scenario failed: {e}", file=sys.stderr)
        return EXIT_SCENARIO
    finally:
        events = harness.log.events()
        harness.close()
    for ev in events:
        print(ev.to_json_line())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="door", description="face-recognition smart door toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the controller and admin API")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("faceapi", help="run the recognition service")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_faceapi)

    p = sub.add_parser("enroll", help="enroll a person from a PGM file")
    p.add_argument("--name", required=True)
    p.add_argument("--role", required=True,
                   choices=["resident", "guest", "blacklisted"])
    p.add_argument("--image", required=True)
    p.add_argument("--expires", help="guest expiry, ISO 8601")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_enroll)

    p = sub.add_parser("replay", help="replay a scenario script deterministically")
    p.add_argument("--scenario", required=True)
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Generate a demo workspace: config file, PGM face frames, a seeded
person store, and a replayable scenario script.

Usage: python3 scripts/make_demo_assets.py [outdir]   (default: ./demo)

Afterwards:
    door replay --scenario demo/grant.scenario --config demo/door.json
    door faceapi --config demo/door.json &
    door run --config demo/door.json
"""

import json
import os
import sys

sys.path.insert(0, "tests")
from conftest import face_frame  # noqa: E402

from smartdoor import vision  # noqa: E402
from smartdoor.faceapi import FaceApiService  # noqa: E402
from smartdoor.model import ManualClock  # noqa: E402

outdir = sys.argv[1] if len(sys.argv) > 1 else "demo"
os.makedirs(outdir, exist_ok=True)

frame = face_frame(1)
with open(os.path.join(outdir, "karan.pgm"), "wb") as f:
    f.write(vision.encode_pgm(frame))
with open(os.path.join(outdir, "stranger.pgm"), "wb") as f:
    f.write(vision.encode_pgm(face_frame(99)))

store_path = os.path.join(outdir, "store.json")
service = FaceApiService(clock=ManualClock(), store_path=store_path,
                         persisted_group_id="home")
service.create_group("home")
pid = service.create_person("home", "Karan", "resident")
face = vision.crop(frame, vision.detect_face(frame, 0.01))
service.add_face("home", pid, vision.encode_pgm(face))
service.train("home")

config = {
    "admin_token": "demo-token",
    "api_key": "demo-key",
    "person_group_id": "home",
    "recognition_endpoint": "http://127.0.0.1:8701",
    "faceapi_listen": "127.0.0.1:8701",
    "admin_listen": "127.0.0.1:8700",
    "store_path": store_path,
    "event_log_path": os.path.join(outdir, "events.jsonl"),
}
with open(os.path.join(outdir, "door.json"), "w") as f:
    json.dump(config, f, indent=2)

with open(os.path.join(outdir, "grant.scenario"), "w") as f:
    f.write("# resident rings the doorbell, door unlocks then relocks\n"
            "at 0 frame karan.pgm\n"
            "at 250 press\n"
            "at 250 advance 10000\n")
with open(os.path.join(outdir, "deny.scenario"), "w") as f:
    f.write("# a stranger rings the doorbell, door stays locked\n"
            "at 0 frame stranger.pgm\n"
            "at 250 press\n"
            "at 250 advance 10000\n")

print(f"demo assets written to {outdir}/ (person {pid} enrolled)")

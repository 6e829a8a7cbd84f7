"""Person groups, enrollment persistence and the identify computation.

A group is a single-writer structure: every mutation bumps `version` and
invalidates training; identify is only legal while `trained_version`
matches `version`. Matching is cosine similarity between unit descriptors,
so the per-person score is a plain dot-product maximum.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass

from .errors import (DegenerateDescriptor, NotTrained, PersonWithoutFace,
                     RoleExpiryMismatch, StoreCorrupt, UnknownPerson)
from .model import (DESCRIPTOR_LEN, Clock, FaceBox, FaceDescriptor, GrayImage,
                    PersonRecord, Role)
from . import vision


@dataclass(frozen=True)
class IdentifyCandidate:
    person_id: str
    confidence: float


class PersonGroup:
    def __init__(self, group_id: str):
        self.group_id = group_id
        self.persons: dict[str, PersonRecord] = {}  # insertion = enrollment order
        self.person_counter = 0  # ids are sequential so replays are deterministic
        self.version = 0
        self.trained_version: int | None = None
        self.train_status: str | None = None  # None until first train

    @property
    def trained(self) -> bool:
        return self.trained_version == self.version

    def _mutated(self):
        self.version += 1

    def add_person(self, name: str, role: Role, guest_expires_at: int | None = None,
                   enrolled_at: int = 0) -> str:
        if (role == Role.GUEST) != (guest_expires_at is not None):
            raise RoleExpiryMismatch("guest role requires guest_expires_at")
        self.person_counter += 1
        person_id = f"p{self.person_counter:04d}"
        self.persons[person_id] = PersonRecord(
            person_id=person_id, name=name, role=role,
            guest_expires_at=guest_expires_at, enrolled_at=enrolled_at)
        self._mutated()
        return person_id

    def get_person(self, person_id: str) -> PersonRecord:
        try:
            return self.persons[person_id]
        except KeyError:
            raise UnknownPerson(person_id)

    def delete_person(self, person_id: str) -> None:
        self.get_person(person_id)
        del self.persons[person_id]
        self._mutated()

    def add_face(self, person_id: str, image: GrayImage,
                 min_area_fraction: float = 0.01) -> str:
        """Run the vision pipeline on `image` and append the descriptor."""
        person = self.get_person(person_id)
        box = vision.detect_face(image, min_area_fraction)
        descriptor = vision.extract_descriptor(vision.crop(image, box))
        person.descriptors.append(descriptor)
        self._mutated()
        return f"face-{person_id}-{len(person.descriptors)}"

    def add_descriptor(self, person_id: str, descriptor: FaceDescriptor) -> None:
        """Direct descriptor injection (tests, migration)."""
        self.get_person(person_id).descriptors.append(descriptor)
        self._mutated()

    def train(self) -> str:
        for person in self.persons.values():
            if not person.descriptors:
                raise PersonWithoutFace(person.person_id)
        self.trained_version = self.version
        self.train_status = "succeeded"
        return self.train_status

    def identify(self, descriptor: FaceDescriptor, threshold: float,
                 max_candidates: int) -> list[IdentifyCandidate]:
        if not self.trained:
            raise NotTrained(f"group {self.group_id} is not trained at version {self.version}")
        if descriptor.degenerate:
            raise DegenerateDescriptor("cannot identify the all-zero descriptor")
        q = descriptor.values
        scored: list[tuple[float, int, str]] = []
        for order, person in enumerate(self.persons.values()):
            best = None
            for d in person.descriptors:
                dv = d.values
                score = sum(dv[k] * q[k] for k in range(DESCRIPTOR_LEN))
                if best is None or score > best:
                    best = score
            if best is None:
                continue
            confidence = min(1.0, max(0.0, best))
            if confidence >= threshold:
                scored.append((confidence, order, person.person_id))
        scored.sort(key=lambda t: (-t[0], t[1]))
        return [IdentifyCandidate(pid, conf)
                for conf, _, pid in scored[:max_candidates]]


@dataclass(frozen=True)
class DetectedFaceHandle:
    face_id: str
    descriptor: FaceDescriptor
    box: FaceBox
    expires_at: int


class FaceHandleRegistry:
    """Ephemeral face_id -> descriptor map with TTL, like the cloud API."""

    def __init__(self, clock: Clock, ttl_seconds: float):
        self._clock = clock
        self._ttl_ms = int(ttl_seconds * 1000)
        self._handles: dict[str, DetectedFaceHandle] = {}

    def register(self, descriptor: FaceDescriptor, box) -> DetectedFaceHandle:
        handle = DetectedFaceHandle(
            face_id=uuid.uuid4().hex, descriptor=descriptor, box=box,
            expires_at=self._clock.now_ms() + self._ttl_ms)
        self._handles[handle.face_id] = handle
        return handle

    def lookup(self, face_id: str) -> DetectedFaceHandle | None:
        """Returns None when unknown; caller distinguishes expired handles."""
        handle = self._handles.get(face_id)
        if handle is None:
            return None
        if self._clock.now_ms() >= handle.expires_at:
            del self._handles[face_id]
            return None
        return handle


# --- Persistence ---------------------------------------------------------------

def _group_to_doc(group: PersonGroup) -> dict:
    return {
        "group_id": group.group_id,
        "version": group.version,
        "person_counter": group.person_counter,
        "trained": group.trained,
        "train_status": group.train_status,
        "persons": [
            {
                "person_id": p.person_id,
                "name": p.name,
                "role": p.role.value,
                "enrolled_at": p.enrolled_at,
                **({"guest_expires_at": p.guest_expires_at}
                   if p.guest_expires_at is not None else {}),
                "descriptors": [[format(v, ".17g") for v in d.values]
                                for d in p.descriptors],
            }
            for p in group.persons.values()
        ],
    }


def persist(group: PersonGroup, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_group_to_doc(group), f, indent=1)
        f.write("\n")


def load(path: str) -> PersonGroup:
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise StoreCorrupt(str(e))
    try:
        group = PersonGroup(doc["group_id"])
        for raw in doc["persons"]:
            expires = raw.get("guest_expires_at")
            person = PersonRecord(
                person_id=raw["person_id"], name=raw["name"],
                role=Role(raw["role"]), enrolled_at=raw["enrolled_at"],
                guest_expires_at=expires)
            for d in raw["descriptors"]:
                if len(d) != DESCRIPTOR_LEN:
                    raise StoreCorrupt("descriptor length mismatch")
                person.descriptors.append(FaceDescriptor(tuple(float(v) for v in d)))
            group.persons[person.person_id] = person
        group.version = doc["version"]
        group.person_counter = doc.get("person_counter", len(group.persons))
        group.train_status = doc.get("train_status")
        group.trained_version = doc["version"] if doc["trained"] else None
    except (KeyError, TypeError, ValueError) as e:
        raise StoreCorrupt(f"malformed store document: {e}")
    return group

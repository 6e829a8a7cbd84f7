"""Error taxonomy shared across the door stack.

Every failure that can cross a module boundary has a named exception so
callers can map it onto wire codes or denial reasons without string
matching.
"""


class SmartDoorError(Exception):
    """Base class for all domain errors."""

    code = "BadRequest"


class ConfigInvalid(SmartDoorError):
    def __init__(self, field: str, reason: str = ""):
        self.field = field
        self.reason = reason
        super().__init__(f"invalid config field {field!r}: {reason}")


class InvalidImage(SmartDoorError):
    code = "InvalidImage"


class InvalidBox(SmartDoorError):
    code = "BadRequest"


class NoFaceFound(SmartDoorError):
    code = "NoFaceFound"


class UnknownPerson(SmartDoorError):
    code = "UnknownPerson"


class RoleExpiryMismatch(SmartDoorError):
    code = "BadRequest"


class PersonWithoutFace(SmartDoorError):
    code = "PersonWithoutFace"

    def __init__(self, person_id: str):
        self.person_id = person_id
        super().__init__(f"person {person_id} has no enrolled face")


class NotTrained(SmartDoorError):
    code = "NotTrained"


class DegenerateDescriptor(SmartDoorError):
    code = "BadRequest"


class StoreCorrupt(SmartDoorError):
    code = "BadRequest"


class FaceIdExpired(SmartDoorError):
    code = "FaceIdExpired"


class Unauthorized(SmartDoorError):
    code = "Unauthorized"


class CaptureFailed(SmartDoorError):
    code = "BadRequest"


class RecognitionUnavailable(SmartDoorError):
    """Recognition service unreachable after retry; the door fails secure."""

    code = "BadRequest"


class ScenarioError(SmartDoorError):
    """Scenario script unreadable or references a missing frame file."""

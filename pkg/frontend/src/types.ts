/** Wire types of the door controller's admin HTTP API. */

export type EventKind =
  | "DoorbellPressed"
  | "FrameCaptured"
  | "FaceDetected"
  | "NoFaceFound"
  | "Identified"
  | "AccessGranted"
  | "AccessDenied"
  | "GuestExpired"
  | "BlacklistAlert"
  | "DoorUnlocked"
  | "DoorRelocked"
  | "UserEnrolled"
  | "RemoteUnlock"
  | "Greeting";

export interface DoorEvent {
  seq: number;
  ts_ms: number;
  kind: EventKind;
  payload: Record<string, unknown>;
}

export type StateSnapshot =
  | { lock_state: "LOCKED" }
  | { lock_state: "UNLOCKED"; relock_at: number };

export interface PersonDoc {
  person_id: string;
  name: string;
  role: "resident" | "guest" | "blacklisted";
  enrolled_at: number;
  face_count: number;
  guest_expires_at?: number;
}

export interface DoorbellResult {
  accepted: boolean;
  outcome?: "GRANT" | "DENY";
  reason?: string;
}

export interface FaceBoxPayload {
  left: number;
  top: number;
  width: number;
  height: number;
}

export function isDoorEvent(value: unknown): value is DoorEvent {
  if (typeof value !== "object" || value === null) return false;
  const v = value as Record<string, unknown>;
  return (
    typeof v.seq === "number" &&
    typeof v.ts_ms === "number" &&
    typeof v.kind === "string" &&
    typeof v.payload === "object" &&
    v.payload !== null
  );
}

/** Pure dashboard state: a snapshot plus a fold over the event stream.
 *
 * Every rendered fact is reconstructible from GET /api/state and the
 * events after it, so a page refresh (new snapshot, resumed stream)
 * lands on the same state. The countdown renders from `relockAt`, a
 * controller-clock deadline, never from a timer started locally.
 */

import type { DoorEvent, FaceBoxPayload, StateSnapshot } from "./types.js";

export interface Alert {
  id: number;
  text: string;
  atMs: number;
}

export interface DashboardState {
  lockState: "LOCKED" | "UNLOCKED";
  relockAt: number | null;
  latestBox: FaceBoxPayload | null;
  latestFrameSeq: number | null;
  greeting: string | null;
  alerts: Alert[];
  feed: DoorEvent[];
  lastSeq: number;
}

export const FEED_LIMIT = 200;

export function initialState(snapshot: StateSnapshot, lastSeq = 0): DashboardState {
  return {
    lockState: snapshot.lock_state,
    relockAt: snapshot.lock_state === "UNLOCKED" ? snapshot.relock_at : null,
    latestBox: null,
    latestFrameSeq: null,
    greeting: null,
    alerts: [],
    feed: [],
    lastSeq,
  };
}

export function reduce(state: DashboardState, event: DoorEvent): DashboardState {
  const next: DashboardState = {
    ...state,
    alerts: state.alerts,
    feed: [event, ...state.feed].slice(0, FEED_LIMIT),
    lastSeq: Math.max(state.lastSeq, event.seq),
  };
  switch (event.kind) {
    case "FrameCaptured":
      next.latestFrameSeq = event.seq;
      next.latestBox = null;
      break;
    case "FaceDetected":
      next.latestBox = (event.payload.box as FaceBoxPayload | undefined) ?? null;
      break;
    case "Greeting":
      next.greeting = typeof event.payload.text === "string" ? event.payload.text : null;
      break;
    case "DoorUnlocked": {
      next.lockState = "UNLOCKED";
      const relockAt = event.payload.relock_at;
      next.relockAt = typeof relockAt === "number" ? relockAt : null;
      break;
    }
    case "DoorRelocked":
      next.lockState = "LOCKED";
      next.relockAt = null;
      next.greeting = null;
      break;
    case "BlacklistAlert": {
      const name = typeof event.payload.name === "string" ? event.payload.name : "unknown";
      next.alerts = [
        ...state.alerts,
        { id: event.seq, text: `blacklisted person at the door: ${name}`, atMs: event.ts_ms },
      ];
      break;
    }
    default:
      break;
  }
  return next;
}

/** Alert banners stay until the operator dismisses them explicitly. */
export function dismissAlert(state: DashboardState, alertId: number): DashboardState {
  return { ...state, alerts: state.alerts.filter((a) => a.id !== alertId) };
}

/** Milliseconds left on the countdown, given the controller-clock time now. */
export function countdownMs(state: DashboardState, nowMs: number): number | null {
  if (state.lockState !== "UNLOCKED" || state.relockAt === null) return null;
  return Math.max(0, state.relockAt - nowMs);
}

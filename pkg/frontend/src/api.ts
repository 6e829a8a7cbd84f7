/** Typed client for the door controller's admin HTTP API.
 *
 * Every request carries the admin token in the X-Admin-Token header; the
 * token lives only in this object (never persisted).
 */

import type { DoorbellResult, DoorEvent, PersonDoc, StateSnapshot } from "./types.js";

export class AdminApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "AdminApiError";
  }
}

export class AdminClient {
  constructor(
    readonly baseUrl: string,
    private readonly token: string,
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: {
        "X-Admin-Token": this.token,
        ...(body !== undefined ? { "Content-Type": "application/json" } : {}),
      },
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    const doc: unknown = await resp.json();
    if (!resp.ok) {
      const err = doc as { code?: string; message?: string };
      throw new AdminApiError(resp.status, err.code ?? "Error", err.message ?? resp.statusText);
    }
    return doc as T;
  }

  state(): Promise<StateSnapshot> {
    return this.request("GET", "/api/state");
  }

  events(sinceSeq = 0): Promise<DoorEvent[]> {
    return this.request("GET", `/api/events?since_seq=${sinceSeq}`);
  }

  unlock(durationSeconds?: number): Promise<StateSnapshot> {
    return this.request(
      "POST",
      "/api/unlock",
      durationSeconds === undefined ? {} : { duration: durationSeconds },
    );
  }

  enroll(name: string, role: string, guestExpiresAt?: number): Promise<{ person_id: string }> {
    const body: Record<string, unknown> = { name, role };
    if (guestExpiresAt !== undefined) body.guest_expires_at = guestExpiresAt;
    return this.request("POST", "/api/enroll", body);
  }

  persons(): Promise<PersonDoc[]> {
    return this.request("GET", "/api/persons");
  }

  deletePerson(personId: string): Promise<void> {
    return this.request("DELETE", `/api/persons/${personId}`);
  }

  doorbell(): Promise<DoorbellResult> {
    return this.request("POST", "/api/doorbell");
  }
}

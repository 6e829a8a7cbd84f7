/** Newline-delimited JSON event stream client with cursor resume.
 *
 * The server replays everything after `since_seq`, so tracking the last
 * seen sequence number across reconnects guarantees no event is lost;
 * the `seq > lastSeq` guard guarantees none is duplicated. Reconnection
 * is serialized: one read loop, one live connection at a time.
 */

import { isDoorEvent, type DoorEvent } from "./types.js";

export type StreamStatus = "connecting" | "open" | "retrying" | "stopped";

export interface EventStreamOptions {
  sinceSeq?: number;
  retryDelayMs?: number;
  onEvent: (event: DoorEvent) => void;
  onStatus?: (status: StreamStatus) => void;
  fetchImpl?: typeof fetch;
}

const delay = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

export class EventStream {
  lastSeq: number;
  private stopped = false;
  private aborter: AbortController | null = null;
  private loop: Promise<void> | null = null;
  private readonly retryDelayMs: number;
  private readonly fetchImpl: typeof fetch;

  constructor(
    private readonly baseUrl: string,
    private readonly token: string,
    private readonly options: EventStreamOptions,
  ) {
    this.lastSeq = options.sinceSeq ?? 0;
    this.retryDelayMs = options.retryDelayMs ?? 500;
    this.fetchImpl = options.fetchImpl ?? fetch;
  }

  start(): this {
    if (this.loop === null) {
      this.loop = this.run();
    }
    return this;
  }

  /** Aborts the connection and waits for the read loop to wind down. */
  async stop(): Promise<void> {
    this.stopped = true;
    this.aborter?.abort();
    await this.loop;
    this.options.onStatus?.("stopped");
  }

  private async run(): Promise<void> {
    while (!this.stopped) {
      this.aborter = new AbortController();
      try {
        this.options.onStatus?.("connecting");
        await this.readOnce(this.aborter.signal);
      } catch {
        // fall through to the retry path below
      }
      if (this.stopped) break;
      this.options.onStatus?.("retrying");
      await delay(this.retryDelayMs);
    }
  }

  private async readOnce(signal: AbortSignal): Promise<void> {
    const url = `${this.baseUrl}/api/events/stream?since_seq=${this.lastSeq}`;
    const resp = await this.fetchImpl(url, {
      headers: { "X-Admin-Token": this.token },
      signal,
    });
    if (!resp.ok || resp.body === null) {
      throw new Error(`stream request failed: ${resp.status}`);
    }
    this.options.onStatus?.("open");
    const reader = resp.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    try {
      for (;;) {
        const { done, value } = await reader.read();
        if (done) break;
        buffer += decoder.decode(value, { stream: true });
        let newline: number;
        while ((newline = buffer.indexOf("\n")) >= 0) {
          const line = buffer.slice(0, newline).trim();
          buffer = buffer.slice(newline + 1);
          if (line) this.deliver(line);
        }
      }
    } finally {
      reader.releaseLock();
    }
  }

  private deliver(line: string): void {
    let parsed: unknown;
    try {
      parsed = JSON.parse(line);
    } catch {
      return; // a torn line from a dropped connection; resume re-sends it
    }
    if (!isDoorEvent(parsed)) return;
    if (parsed.seq <= this.lastSeq) return; // already seen before a reconnect
    this.lastSeq = parsed.seq;
    this.options.onEvent(parsed);
  }
}

/** Browser entry point: wires the admin API client, the event stream,
 * and the pure dashboard state to a plain-DOM page.
 */

import { AdminApiError, AdminClient } from "./api.js";
import { countdownMs, dismissAlert, initialState, reduce, type DashboardState } from "./state.js";
import { EventStream, type StreamStatus } from "./stream.js";
import type { PersonDoc } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

let client: AdminClient | null = null;
let stream: EventStream | null = null;
let state: DashboardState | null = null;
let persons: PersonDoc[] = [];

function render(): void {
  if (!state) return;
  const lock = el<HTMLDivElement>("lock-state");
  lock.textContent = state.lockState;
  lock.className = state.lockState === "UNLOCKED" ? "unlocked" : "locked";

  const remaining = countdownMs(state, Date.now());
  el<HTMLDivElement>("countdown").textContent =
    remaining === null ? "" : `relocks in ${(remaining / 1000).toFixed(1)} s`;

  el<HTMLButtonElement>("unlock-button").disabled =
    client === null || state.lockState === "UNLOCKED";

  el<HTMLDivElement>("greeting").textContent = state.greeting ?? "";

  const alerts = el<HTMLDivElement>("alerts");
  alerts.replaceChildren(
    ...state.alerts.map((alert) => {
      const banner = document.createElement("div");
      banner.className = "alert";
      banner.textContent = alert.text + " ";
      const dismiss = document.createElement("button");
      dismiss.textContent = "dismiss";
      dismiss.onclick = () => {
        if (state) state = dismissAlert(state, alert.id);
        render();
      };
      banner.appendChild(dismiss);
      return banner;
    }),
  );

  const box = state.latestBox;
  el<HTMLDivElement>("face-box").textContent = box
    ? `face at (${box.left}, ${box.top}) ${box.width}×${box.height}` +
      (state.latestFrameSeq !== null ? ` in frame #${state.latestFrameSeq}` : "")
    : "";

  el<HTMLUListElement>("feed").replaceChildren(
    ...state.feed.map((event) => {
      const item = document.createElement("li");
      item.textContent = `#${event.seq} ${event.kind} ${JSON.stringify(event.payload)}`;
      return item;
    }),
  );
}

function renderPersons(): void {
  const rows = persons.map((person) => {
    const row = document.createElement("tr");
    const expired =
      person.guest_expires_at !== undefined && person.guest_expires_at < Date.now();
    if (expired) row.style.textDecoration = "line-through";
    const expiry =
      person.guest_expires_at === undefined
        ? ""
        : new Date(person.guest_expires_at).toLocaleString();
    for (const text of [person.person_id, person.name, person.role, expiry]) {
      const cell = document.createElement("td");
      cell.textContent = text;
      row.appendChild(cell);
    }
    const actions = document.createElement("td");
    const remove = document.createElement("button");
    remove.textContent = "delete";
    remove.onclick = async () => {
      if (!client || !confirm(`Delete ${person.name} (${person.person_id})?`)) return;
      await client.deletePerson(person.person_id);
      await refreshPersons();
    };
    actions.appendChild(remove);
    row.appendChild(actions);
    return row;
  });
  el<HTMLTableSectionElement>("persons-body").replaceChildren(...rows);
}

async function refreshPersons(): Promise<void> {
  if (!client) return;
  persons = await client.persons();
  renderPersons();
}

function setStatus(text: string): void {
  el<HTMLDivElement>("status").textContent = text;
}

async function connect(): Promise<void> {
  const baseUrl = el<HTMLInputElement>("base-url").value.replace(/\/$/, "");
  const token = el<HTMLInputElement>("token").value; // held in memory only
  if (stream) await stream.stop();
  client = new AdminClient(baseUrl, token);
  try {
    const snapshot = await client.state();
    state = initialState(snapshot);
  } catch (err) {
    client = null;
    setStatus(
      err instanceof AdminApiError && err.status === 401
        ? "wrong admin token — re-enter it"
        : `cannot reach controller: ${String(err)}`,
    );
    return;
  }
  stream = new EventStream(baseUrl, token, {
    onEvent: (event) => {
      if (state) state = reduce(state, event);
      render();
      if (event.kind === "UserEnrolled") void refreshPersons();
    },
    onStatus: (status: StreamStatus) => setStatus(`stream: ${status}`),
  }).start();
  render();
  await refreshPersons();
}

function wireForms(): void {
  el<HTMLButtonElement>("connect-button").onclick = () => void connect();

  el<HTMLButtonElement>("unlock-button").onclick = async () => {
    if (!client) return;
    const raw = el<HTMLInputElement>("unlock-duration").value;
    try {
      await client.unlock(raw ? Number(raw) : undefined);
    } catch (err) {
      if (err instanceof AdminApiError && err.status === 401) {
        setStatus("wrong admin token — re-enter it");
      } else {
        setStatus(String(err));
      }
    }
  };

  el<HTMLButtonElement>("doorbell-button").onclick = async () => {
    if (!client) return;
    const result = await client.doorbell();
    setStatus(
      result.accepted ? `doorbell: ${result.outcome} (${result.reason})` : "doorbell: debounced",
    );
  };

  el<HTMLFormElement>("enroll-form").onsubmit = async (submit) => {
    submit.preventDefault();
    if (!client) return;
    const name = el<HTMLInputElement>("enroll-name").value.trim();
    const role = el<HTMLSelectElement>("enroll-role").value;
    const expiryRaw = el<HTMLInputElement>("enroll-expiry").value;
    if (!name) {
      setStatus("enroll: name is required");
      return;
    }
    if (role === "guest" && !expiryRaw) {
      setStatus("enroll: a guest needs an expiry"); // validated client-side
      return;
    }
    try {
      const expiry = role === "guest" ? new Date(expiryRaw).getTime() : undefined;
      const { person_id } = await client.enroll(name, role, expiry);
      setStatus(`enrolled ${name} as ${person_id}`);
      await refreshPersons();
    } catch (err) {
      setStatus(
        err instanceof AdminApiError ? `enroll failed: ${err.code}` : `enroll failed: ${err}`,
      );
    }
  };
}

if (typeof document !== "undefined") {
  wireForms();
  // keep the countdown text live; the deadline itself comes from relock_at
  setInterval(render, 100);
}

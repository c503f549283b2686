/** Thin client for the session server. Rejections surface verbatim. */

import {
  ActionName,
  MazeConfigView,
  QTablePayload,
  StatusPayload,
  TrainingEvent,
  TrajectoryPayload,
  VisitsPayload,
} from "./types";

export class ApiRejection extends Error {}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(path, {
    headers: { "Content-Type": "application/json" },
    ...init,
  });
  const body = await resp.json().catch(() => ({}));
  if (!resp.ok) {
    throw new ApiRejection(body.detail ?? body.error ?? `HTTP ${resp.status}`);
  }
  return body as T;
}

export class SessionApi {
  constructor(public readonly sessionId: string) {}

  static async create(overrides: Record<string, unknown> = {}): Promise<SessionApi> {
    const body = await request<{ session_id: string }>("/session", {
      method: "POST",
      body: JSON.stringify(overrides),
    });
    return new SessionApi(body.session_id);
  }

  private url(suffix: string): string {
    return `/session/${this.sessionId}${suffix}`;
  }

  config(): Promise<MazeConfigView> {
    return request(this.url("/config"));
  }

  status(): Promise<StatusPayload> {
    return request(this.url("/status"));
  }

  qtable(): Promise<QTablePayload> {
    return request(this.url("/qtable"));
  }

  visits(): Promise<VisitsPayload> {
    return request(this.url("/visits"));
  }

  trajectory(): Promise<TrajectoryPayload> {
    return request(this.url("/trajectory"));
  }

  control(command: "start" | "pause" | "step" | "reset"): Promise<StatusPayload> {
    return request(this.url("/control"), { method: "POST", body: JSON.stringify({ command }) });
  }

  setMode(mode: "auto" | "manual"): Promise<StatusPayload> {
    return request(this.url("/mode"), { method: "POST", body: JSON.stringify({ mode }) });
  }

  setEpsilon(epsilon: number): Promise<StatusPayload> {
    return request(this.url("/epsilon"), { method: "POST", body: JSON.stringify({ epsilon }) });
  }

  advise(action: ActionName): Promise<unknown> {
    return request(this.url("/advice"), { method: "POST", body: JSON.stringify({ action }) });
  }

  overrideReward(value: number): Promise<unknown> {
    return request(this.url("/reward"), { method: "POST", body: JSON.stringify({ value }) });
  }

  confirmReward(): Promise<unknown> {
    return request(this.url("/reward"), { method: "POST", body: JSON.stringify({ confirm: true }) });
  }

  /** Server-sent events; onDrop fires when the stream ends or breaks. */
  subscribe(onEvent: (event: TrainingEvent) => void, onDrop: () => void): () => void {
    const source = new EventSource(this.url("/events"));
    source.onmessage = (message) => {
      const data = JSON.parse(message.data);
      if (data.kind === "stream_closed") {
        source.close();
        onDrop();
        return;
      }
      onEvent(data as TrainingEvent);
    };
    source.onerror = () => onDrop();
    return () => source.close();
  }
}

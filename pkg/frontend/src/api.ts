import type {
  ClickResult,
  DemoTrace,
  RouteResult,
  SessionInfo,
  TrialView,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** Thin typed wrapper over the tutor service's HTTP+JSON endpoints. */
export class TutorClient {
  constructor(
    private base: string,
    private fetchImpl: FetchLike = (...a) => fetch(...a),
  ) {
    this.base = base.replace(/\/$/, "");
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const res = await this.fetchImpl(this.base + path, init);
    const payload = await res.json().catch(() => ({}));
    if (!res.ok) {
      throw new ApiError(res.status, payload.detail ?? res.statusText);
    }
    return payload as T;
  }

  createSession(opts: {
    condition: string;
    env: string;
    seed: number;
    trials?: number;
  }): Promise<SessionInfo> {
    return this.request("POST", "/sessions", opts);
  }

  getTrial(session: string, k: number): Promise<TrialView> {
    return this.request("GET", `/sessions/${session}/trials/${k}`);
  }

  click(session: string, k: number, node: number): Promise<ClickResult> {
    return this.request("POST", `/sessions/${session}/trials/${k}/clicks`, { node });
  }

  submitRoute(session: string, k: number, path: number[]): Promise<RouteResult> {
    return this.request("POST", `/sessions/${session}/trials/${k}/route`, { path });
  }

  getDemo(opts: {
    env: string;
    policy?: string;
    seed?: number;
    step?: string;
  }): Promise<DemoTrace> {
    const q = new URLSearchParams();
    q.set("env", opts.env);
    if (opts.policy !== undefined) q.set("policy", opts.policy);
    if (opts.seed !== undefined) q.set("seed", String(opts.seed));
    if (opts.step !== undefined) q.set("step", opts.step);
    return this.request("GET", `/demos?${q}`);
  }
}

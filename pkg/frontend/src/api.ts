// Typed fetch client for the /v1 session service.
//
// Every call returns the parsed body together with the raw response text so
// callers can lift byte-exact literals for display (see raw.ts).

import type {
  DataRequest,
  DatasetSummary,
  EquationResponse,
  ErrorEnvelope,
  FitRequest,
  FitResponse,
  GraphsResponse,
  HistoryResponse,
  PlotKind,
  PlotResponse,
  QuestionRequest,
  QuestionResponse,
  SessionCreated,
  SessionList,
  SessionOverview,
  SplitName,
  UnlockResponse,
  UpdateRequest,
  UpdateResponse,
} from "./types.js";

export interface RawJson<T> {
  data: T;
  raw: string;
  status: number;
}

export class ApiError extends Error {
  readonly status: number;
  readonly type: string;
  readonly extra: Record<string, unknown>;

  constructor(message: string, status: number, type: string, extra: Record<string, unknown> = {}) {
    super(message);
    this.name = "ApiError";
    this.status = status;
    this.type = type;
    this.extra = extra;
  }
}

export interface PlotParams {
  dataset?: SplitName;
  fx?: string;
  fy?: string;
  by?: string;
  bins?: number;
  resolution?: number;
}

function query(params: Record<string, string | number | undefined>): string {
  const q = new URLSearchParams();
  for (const [k, v] of Object.entries(params)) {
    if (v !== undefined) q.set(k, String(v));
  }
  const s = q.toString();
  return s ? `?${s}` : "";
}

export class LabApi {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<RawJson<T>> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const res = await this.fetchFn(`${this.base}${path}`, init);
    const raw = await res.text();
    if (!res.ok) {
      let envelope: ErrorEnvelope;
      try {
        envelope = JSON.parse(raw) as ErrorEnvelope;
      } catch {
        throw new ApiError(raw || res.statusText, res.status, "HttpError");
      }
      const { error, type, ...extra } = envelope;
      throw new ApiError(error ?? res.statusText, res.status, type ?? "HttpError", extra);
    }
    return { data: JSON.parse(raw) as T, raw, status: res.status };
  }

  createSession(config?: Partial<{ seed: number; width: number; depth: number; islands: number; alpha: number }>) {
    return this.request<SessionCreated>("POST", "/v1/sessions", config ?? {});
  }

  listSessions() {
    return this.request<SessionList>("GET", "/v1/sessions");
  }

  overview(sid: string) {
    return this.request<SessionOverview>("GET", `/v1/sessions/${sid}`);
  }

  history(sid: string) {
    return this.request<HistoryResponse>("GET", `/v1/sessions/${sid}/history`);
  }

  loadData(sid: string, body: DataRequest) {
    return this.request<DatasetSummary>("POST", `/v1/sessions/${sid}/data`, body);
  }

  poseQuestion(sid: string, body: QuestionRequest) {
    return this.request<QuestionResponse>("POST", `/v1/sessions/${sid}/qgraph`, body);
  }

  fit(sid: string, pid: string, body: FitRequest = {}) {
    return this.request<FitResponse>("POST", `/v1/sessions/${sid}/qgraph/${pid}/fit`, body);
  }

  update(sid: string, body: UpdateRequest) {
    return this.request<UpdateResponse>("POST", `/v1/sessions/${sid}/update`, body);
  }

  graphs(sid: string, pid: string, n?: number) {
    return this.request<GraphsResponse>("GET", `/v1/sessions/${sid}/qgraph/${pid}/graphs${query({ n })}`);
  }

  equation(sid: string, pid: string, gid: number, signif?: number, format?: string) {
    return this.request<EquationResponse>(
      "GET",
      `/v1/sessions/${sid}/qgraph/${pid}/graphs/${gid}/equation${query({ signif, format })}`,
    );
  }

  plot(sid: string, pid: string, gid: number, kind: PlotKind, params: PlotParams = {}) {
    return this.request<PlotResponse>(
      "GET",
      `/v1/sessions/${sid}/qgraph/${pid}/graphs/${gid}/plot/${kind}${query({ ...params })}`,
    );
  }

  unlockHoldout(sid: string) {
    return this.request<UnlockResponse>("POST", `/v1/sessions/${sid}/holdout/unlock`);
  }
}

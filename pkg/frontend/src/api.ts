/** Thin typed client over the annotation service HTTP API.
 *
 * The transport is injectable (window.fetch in the browser, a scripted
 * in-memory double in tests).  Network-level failures surface as
 * TransportError so the controller can queue a retry; HTTP 409 surfaces
 * as ConflictError so it can resynchronise with the service cursor.
 */

import type {
  Category,
  EstimatePayload,
  JudgmentAck,
  NextResponse,
  SessionInfo,
} from "./types.js";

export interface TransportResponse {
  status: number;
  json(): Promise<unknown>;
}

export type Transport = (
  path: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<TransportResponse>;

export class TransportError extends Error {
  constructor(cause: unknown) {
    super(`network failure: ${String(cause)}`);
    this.name = "TransportError";
  }
}

export class ConflictError extends Error {
  constructor(detail: string) {
    super(detail);
    this.name = "ConflictError";
  }
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

async function detailOf(response: TransportResponse): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    return typeof body.detail === "string" ? body.detail : JSON.stringify(body);
  } catch {
    return "(no detail)";
  }
}

export class ApiClient {
  constructor(
    private readonly transport: Transport,
    private readonly token?: string,
  ) {}

  private async request<T>(
    path: string,
    method: "GET" | "POST",
    body?: unknown,
  ): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (this.token !== undefined) headers["X-Auth-Token"] = this.token;
    let response: TransportResponse;
    try {
      response = await this.transport(path, {
        method,
        headers,
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (cause) {
      throw new TransportError(cause);
    }
    if (response.status === 409) throw new ConflictError(await detailOf(response));
    if (response.status < 200 || response.status >= 300) {
      throw new ApiError(response.status, await detailOf(response));
    }
    return (await response.json()) as T;
  }

  createSession(annotatorId: string, sampleSize: number, seed: number): Promise<SessionInfo> {
    return this.request<SessionInfo>("/sessions", "POST", {
      annotator_id: annotatorId,
      sample_size: sampleSize,
      seed,
    });
  }

  nextItem(sessionId: string): Promise<NextResponse> {
    return this.request<NextResponse>(`/sessions/${sessionId}/next`, "GET");
  }

  submitJudgment(sessionId: string, position: number, category: Category): Promise<JudgmentAck> {
    return this.request<JudgmentAck>(`/sessions/${sessionId}/judgments`, "POST", {
      position,
      category,
    });
  }

  estimate(): Promise<EstimatePayload> {
    return this.request<EstimatePayload>("/estimate", "GET");
  }
}

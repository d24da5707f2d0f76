/**
 * Thin typed client over the service endpoints.
 *
 * Network failures throw NetworkError (retryable); non-2xx replies throw
 * ApiError carrying the service's machine-readable reason verbatim.
 */

import type { NextTaskReply, ServiceError, TaskKind, VoteAck, VotePayload } from "./types.js";

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;

  constructor(status: number, body: ServiceError) {
    super(body.detail || body.error);
    this.name = "ApiError";
    this.code = body.error;
    this.status = status;
  }
}

export class NetworkError extends Error {
  constructor(cause: unknown) {
    super(`network failure: ${String(cause)}`);
    this.name = "NetworkError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function parseError(reply: Response): Promise<ApiError> {
  let body: ServiceError;
  try {
    body = (await reply.json()) as ServiceError;
  } catch {
    body = { error: `http_${reply.status}`, detail: reply.statusText };
  }
  return new ApiError(reply.status, body);
}

export class ApiClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(base = "", fetchImpl: FetchLike = (input, init) => fetch(input, init)) {
    this.base = base.replace(/\/$/, "");
    this.fetchImpl = fetchImpl;
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    let reply: Response;
    try {
      reply = await this.fetchImpl(this.base + path, init);
    } catch (cause) {
      throw new NetworkError(cause);
    }
    if (!reply.ok) {
      throw await parseError(reply);
    }
    return reply;
  }

  async nextTask(annotator: string, kind: TaskKind): Promise<NextTaskReply> {
    const params = new URLSearchParams({ annotator, kind });
    const reply = await this.request(`/api/tasks/next?${params.toString()}`);
    return (await reply.json()) as NextTaskReply;
  }

  async submitVote(payload: VotePayload): Promise<VoteAck> {
    const reply = await this.request("/api/votes", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
    return (await reply.json()) as VoteAck;
  }

  async progress(): Promise<Record<string, Record<string, number>>> {
    const reply = await this.request("/api/progress");
    return (await reply.json()) as Record<string, Record<string, number>>;
  }
}

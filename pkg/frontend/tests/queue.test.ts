import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { MemoryStore, RetryQueue } from "../src/queue.js";
import type { VotePayload } from "../src/types.js";

const VOTE: VotePayload = { task_id: "vt-1", annotator_id: "alice", choice: "candidate_1" };

function okJson(body: unknown): Response {
  return new Response(JSON.stringify(body), { status: 200 });
}

function flakyClient(failures: number) {
  let remaining = failures;
  const attempts: VotePayload[] = [];
  const client = new ApiClient("", async (_input, init) => {
    attempts.push(JSON.parse(String(init?.body)) as VotePayload);
    if (remaining > 0) {
      remaining -= 1;
      throw new TypeError("connection refused");
    }
    return okJson({ status: "ok", task_id: "vt-1", choice: "candidate_1", votes: 1, closed: false });
  });
  return { client, attempts };
}

describe("RetryQueue", () => {
  it("queues a vote when the network is down and reports it undelivered", async () => {
    const { client } = flakyClient(1);
    const queue = new RetryQueue(new MemoryStore());
    const delivered = await queue.submitOrQueue(client, VOTE);
    expect(delivered).toBe(false);
    expect(queue.pending()).toHaveLength(1);
  });

  it("flush delivers retained votes once the network returns", async () => {
    const { client, attempts } = flakyClient(1);
    const queue = new RetryQueue(new MemoryStore());
    await queue.submitOrQueue(client, VOTE);
    const rejections = await queue.flush(client);
    expect(rejections).toEqual([]);
    expect(queue.pending()).toEqual([]);
    expect(attempts).toHaveLength(2); // the failure, then the successful retry
  });

  it("keeps votes queued across repeated network failures", async () => {
    const { client } = flakyClient(5);
    const queue = new RetryQueue(new MemoryStore());
    await queue.submitOrQueue(client, VOTE);
    await queue.flush(client);
    await queue.flush(client);
    expect(queue.pending()).toHaveLength(1);
  });

  it("server rejections leave the queue and surface verbatim", async () => {
    const client = new ApiClient("", async () =>
      new Response(JSON.stringify({ error: "duplicate_vote", detail: "conflicting choice" }), {
        status: 409,
      }),
    );
    const queue = new RetryQueue(new MemoryStore());
    queue.enqueue(VOTE);
    const rejections = await queue.flush(client);
    expect(rejections).toHaveLength(1);
    expect(rejections[0]!.message).toContain("conflicting choice");
    expect(queue.pending()).toEqual([]); // resending a conflict forever helps nobody
  });

  it("deduplicates by task and annotator", () => {
    const queue = new RetryQueue(new MemoryStore());
    queue.enqueue(VOTE);
    queue.enqueue({ ...VOTE });
    expect(queue.pending()).toHaveLength(1);
  });

  it("survives corrupted storage", () => {
    const store = new MemoryStore();
    store.setItem("fedbench.pending_votes", "{not json");
    const queue = new RetryQueue(store);
    expect(queue.pending()).toEqual([]);
  });

  it("direct submit succeeds without touching the queue", async () => {
    const { client } = flakyClient(0);
    const queue = new RetryQueue(new MemoryStore());
    const delivered = await queue.submitOrQueue(client, VOTE);
    expect(delivered).toBe(true);
    expect(queue.pending()).toEqual([]);
  });
});

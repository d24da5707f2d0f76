/**
 * Outbox for votes that could not reach the server.
 *
 * A vote that fails with a network error is retained durably (storage is
 * injectable; the app uses localStorage) and retried before the next
 * submission. Server-side rejections are never retried: an exact resend is
 * already idempotent on the service, and a conflicting duplicate must
 * surface to the annotator verbatim.
 */

import { ApiClient, NetworkError } from "./api.js";
import type { VotePayload } from "./types.js";

export interface KeyValueStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

const STORAGE_KEY = "fedbench.pending_votes";

export class RetryQueue {
  private readonly store: KeyValueStore;

  constructor(store: KeyValueStore) {
    this.store = store;
  }

  pending(): VotePayload[] {
    const raw = this.store.getItem(STORAGE_KEY);
    if (!raw) {
      return [];
    }
    try {
      return JSON.parse(raw) as VotePayload[];
    } catch {
      this.store.removeItem(STORAGE_KEY);
      return [];
    }
  }

  private save(votes: VotePayload[]): void {
    if (votes.length === 0) {
      this.store.removeItem(STORAGE_KEY);
    } else {
      this.store.setItem(STORAGE_KEY, JSON.stringify(votes));
    }
  }

  enqueue(payload: VotePayload): void {
    const votes = this.pending();
    const exists = votes.some(
      (vote) => vote.task_id === payload.task_id && vote.annotator_id === payload.annotator_id,
    );
    if (!exists) {
      votes.push(payload);
      this.save(votes);
    }
  }

  /**
   * Try to deliver every retained vote. Returns the errors of votes the
   * server rejected outright (those leave the queue); network failures
   * keep their votes queued for the next flush.
   */
  async flush(client: ApiClient): Promise<Error[]> {
    const votes = this.pending();
    const kept: VotePayload[] = [];
    const rejections: Error[] = [];
    for (const vote of votes) {
      try {
        await client.submitVote(vote);
      } catch (error) {
        if (error instanceof NetworkError) {
          kept.push(vote);
        } else if (error instanceof Error) {
          rejections.push(error);
        } else {
          rejections.push(new Error(String(error)));
        }
      }
    }
    this.save(kept);
    return rejections;
  }

  /**
   * Submit one vote, falling back to the outbox on network failure.
   * Returns true when the vote is on the server, false when it was queued.
   */
  async submitOrQueue(client: ApiClient, payload: VotePayload): Promise<boolean> {
    try {
      await client.submitVote(payload);
      return true;
    } catch (error) {
      if (error instanceof NetworkError) {
        this.enqueue(payload);
        return false;
      }
      throw error;
    }
  }
}

export class MemoryStore implements KeyValueStore {
  private data = new Map<string, string>();

  getItem(key: string): string | null {
    return this.data.has(key) ? (this.data.get(key) as string) : null;
  }

  setItem(key: string, value: string): void {
    this.data.set(key, value);
  }

  removeItem(key: string): void {
    this.data.delete(key);
  }
}

/**
 * App shell: annotator sign-in, task loop, outbox flushing.
 *
 * The loop is stateless over GET /api/tasks/next: a reload never loses a
 * committed vote, and any vote stranded by a network failure is retried
 * from the outbox before the next fetch.
 */

import { ApiClient, ApiError } from "./api.js";
import { RetryQueue } from "./queue.js";
import {
  renderDone,
  renderError,
  renderPairwiseScreen,
  renderVerificationScreen,
} from "./screens.js";
import type { TaskKind, VotePayload } from "./types.js";

const client = new ApiClient();
const queue = new RetryQueue(window.localStorage);

let annotator = "";
let kind: TaskKind = "verification";
let teardown: (() => void) | null = null;

function stage(): HTMLElement {
  return document.getElementById("stage") as HTMLElement;
}

async function loadNext(): Promise<void> {
  if (teardown) {
    teardown();
    teardown = null;
  }
  for (const rejection of await queue.flush(client)) {
    renderError(stage(), rejection.message);
  }
  let reply;
  try {
    reply = await client.nextTask(annotator, kind);
  } catch (error) {
    renderError(stage(), error instanceof Error ? error.message : String(error));
    return;
  }
  if (reply.task === null) {
    renderDone(stage(), kind);
    return;
  }
  const onSubmit = (payload: VotePayload) => {
    void submit(payload);
  };
  if (reply.task.kind === "verification") {
    renderVerificationScreen(stage(), reply.task, annotator, onSubmit);
  } else {
    teardown = renderPairwiseScreen(stage(), reply.task, annotator, onSubmit);
  }
}

async function submit(payload: VotePayload): Promise<void> {
  try {
    const delivered = await queue.submitOrQueue(client, payload);
    if (!delivered) {
      renderError(stage(), "offline: vote saved locally, will retry");
    }
  } catch (error) {
    // server rejections (e.g. a conflicting duplicate vote) verbatim
    const message = error instanceof ApiError ? `${error.code}: ${error.message}` : String(error);
    renderError(stage(), message);
  }
  await loadNext();
}

function start(): void {
  const form = document.getElementById("signin") as HTMLFormElement;
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const idInput = document.getElementById("annotator-id") as HTMLInputElement;
    const kindInput = document.querySelector(
      "input[name=kind]:checked",
    ) as HTMLInputElement | null;
    if (!idInput.value.trim()) {
      return;
    }
    annotator = idInput.value.trim();
    kind = (kindInput?.value as TaskKind) ?? "verification";
    form.hidden = true;
    (document.getElementById("stage") as HTMLElement).hidden = false;
    void loadNext();
  });
}

start();

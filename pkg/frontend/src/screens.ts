/**
 * DOM rendering for the two task screens. All decision logic lives in
 * choices.ts; this file only lays out elements and wires events.
 */

import { pairwiseChoices, pairwiseKeyChoice, pairwisePayload, verificationChoices, verificationPayload } from "./choices.js";
import type {
  PairwiseChoice,
  PairwiseTaskView,
  VerificationChoice,
  VerificationTaskView,
  VotePayload,
} from "./types.js";
import { SyncedZoom } from "./zoom.js";

export type SubmitHandler = (payload: VotePayload) => void;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function figure(zoom: SyncedZoom, url: string, label: string): HTMLElement {
  const wrap = el("figure", "image-card");
  const viewport = el("div", "viewport");
  const img = el("img");
  img.src = url;
  img.alt = label;
  img.draggable = false;
  viewport.appendChild(img);
  wrap.appendChild(viewport);
  wrap.appendChild(el("figcaption", undefined, label));
  zoom.attach(viewport, img);
  return wrap;
}

function progressLine(remaining: number, total: number): HTMLElement {
  return el("p", "progress", `${remaining} task(s) remaining of ${total}`);
}

export function renderVerificationScreen(
  container: HTMLElement,
  task: VerificationTaskView,
  annotator: string,
  onSubmit: SubmitHandler,
): void {
  container.replaceChildren();
  const zoom = new SyncedZoom();
  container.appendChild(
    el("h2", undefined, `Pick the ground truth: target expression "${task.trg_emotion}"`),
  );
  container.appendChild(progressLine(task.progress.remaining, task.progress.total));

  const row = el("div", "image-row");
  row.appendChild(figure(zoom, task.source_url, "Source"));
  task.candidate_urls.forEach((url, index) => {
    row.appendChild(figure(zoom, url, `Candidate ${index + 1}`));
  });
  container.appendChild(row);

  const caption = el("blockquote", "caption");
  caption.textContent = task.caption;
  container.appendChild(caption);

  const buttons = el("div", "buttons");
  for (const button of verificationChoices(task)) {
    const node = el("button", "choice", button.label);
    node.addEventListener("click", () => {
      onSubmit(verificationPayload(task, annotator, button.choice as VerificationChoice));
    });
    buttons.appendChild(node);
  }
  container.appendChild(buttons);
}

export function renderPairwiseScreen(
  container: HTMLElement,
  task: PairwiseTaskView,
  annotator: string,
  onSubmit: SubmitHandler,
): () => void {
  container.replaceChildren();
  const zoom = new SyncedZoom();
  container.appendChild(el("h2", undefined, task.prompt));
  container.appendChild(
    el("p", "perspective", `Perspective: ${task.perspective} - arrow keys vote`),
  );
  container.appendChild(progressLine(task.progress.remaining, task.progress.total));

  const row = el("div", "image-row");
  row.appendChild(figure(zoom, task.left_url, "Left"));
  row.appendChild(figure(zoom, task.right_url, "Right"));
  container.appendChild(row);

  const submit = (choice: PairwiseChoice) =>
    onSubmit(pairwisePayload(task, annotator, choice));

  const buttons = el("div", "buttons");
  for (const button of pairwiseChoices()) {
    const node = el("button", "choice", button.label);
    node.addEventListener("click", () => submit(button.choice));
    buttons.appendChild(node);
  }
  container.appendChild(buttons);

  const onKey = (event: KeyboardEvent) => {
    const choice = pairwiseKeyChoice(event.key);
    if (choice !== null) {
      event.preventDefault();
      submit(choice); // same payload as the button click
    }
  };
  document.addEventListener("keydown", onKey);
  return () => document.removeEventListener("keydown", onKey);
}

export function renderDone(container: HTMLElement, kind: string): void {
  container.replaceChildren();
  container.appendChild(el("h2", undefined, "All done"));
  container.appendChild(
    el("p", undefined, `No open ${kind} tasks remain for you. Thank you!`),
  );
}

export function renderError(container: HTMLElement, message: string): void {
  const note = el("p", "error", message);
  container.prepend(note);
  setTimeout(() => note.remove(), 6000);
}

/**
 * Pure view-model logic: which buttons a task exposes and what payload a
 * given interaction produces. Kept DOM-free so it is trivially testable.
 */

import type {
  PairwiseChoice,
  PairwiseTaskView,
  PairwiseVotePayload,
  VerificationChoice,
  VerificationTaskView,
  VerificationVotePayload,
} from "./types.js";

export interface ChoiceButton<C extends string> {
  choice: C;
  label: string;
}

/** A one-candidate task must not offer "candidate 2". */
export function verificationChoices(
  task: VerificationTaskView,
): ChoiceButton<VerificationChoice>[] {
  const buttons: ChoiceButton<VerificationChoice>[] = [
    { choice: "candidate_1", label: "Candidate 1" },
  ];
  if (task.candidate_urls.length >= 2) {
    buttons.push({ choice: "candidate_2", label: "Candidate 2" });
  }
  buttons.push({ choice: "reject_both", label: "Reject both" });
  return buttons;
}

export function pairwiseChoices(): ChoiceButton<PairwiseChoice>[] {
  // exactly two buttons: the protocol has no skip
  return [
    { choice: "left", label: "Left image" },
    { choice: "right", label: "Right image" },
  ];
}

export function verificationPayload(
  task: VerificationTaskView,
  annotator: string,
  choice: VerificationChoice,
): VerificationVotePayload {
  if (choice === "candidate_2" && task.candidate_urls.length < 2) {
    throw new Error("task has a single candidate");
  }
  return { task_id: task.task_id, annotator_id: annotator, choice };
}

export function pairwisePayload(
  task: PairwiseTaskView,
  annotator: string,
  choice: PairwiseChoice,
): PairwiseVotePayload {
  return {
    task_id: task.task_id,
    annotator_id: annotator,
    choice,
    perspective: task.perspective,
  };
}

/** Arrow keys mirror the two buttons exactly; other keys do nothing. */
export function pairwiseKeyChoice(key: string): PairwiseChoice | null {
  if (key === "ArrowLeft") {
    return "left";
  }
  if (key === "ArrowRight") {
    return "right";
  }
  return null;
}

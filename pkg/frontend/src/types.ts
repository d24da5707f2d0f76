/**
 * Wire types mirroring the annotation service exactly.
 *
 * Forced choice is enforced at the type level: a pairwise payload can only
 * carry "left" or "right" - there is no abstain/skip value to construct,
 * so the client is incapable of producing a vote the service would treat
 * as abstention.
 */

export type TaskKind = "verification" | "pairwise";

export type VerificationChoice = "candidate_1" | "candidate_2" | "reject_both";
export type PairwiseChoice = "left" | "right";
export type Perspective = "identity" | "magnitude" | "overall";

export interface ProgressCounters {
  remaining: number;
  total: number;
}

export interface VerificationTaskView {
  task_id: string;
  kind: "verification";
  votes: number;
  progress: ProgressCounters;
  trg_emotion: string;
  caption: string;
  source_url: string;
  candidate_urls: string[];
}

export interface PairwiseTaskView {
  task_id: string;
  kind: "pairwise";
  votes: number;
  progress: ProgressCounters;
  perspective: Perspective;
  prompt: string;
  left_url: string;
  right_url: string;
}

export type TaskView = VerificationTaskView | PairwiseTaskView;

export interface NextTaskReply {
  task: TaskView | null;
  progress?: ProgressCounters;
}

export interface VerificationVotePayload {
  task_id: string;
  annotator_id: string;
  choice: VerificationChoice;
}

export interface PairwiseVotePayload {
  task_id: string;
  annotator_id: string;
  choice: PairwiseChoice;
  perspective: Perspective;
}

export type VotePayload = VerificationVotePayload | PairwiseVotePayload;

export interface VoteAck {
  status: "ok";
  task_id: string;
  choice: string;
  votes: number;
  closed: boolean;
}

export interface ServiceError {
  error: string;
  detail: string;
}

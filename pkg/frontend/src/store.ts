/** Pure state for the review loop.
 *
 * The visible state is a function of (server history, unsubmitted local
 * ratings): history fixes the iteration counter and useful tally, the open
 * batch fixes the cards, and only the local rating choices live here until
 * they are submitted.
 */

import type { BatchResponse, HistoryResponse, RatingSubmission, TaskView } from "./types.js";

export type Rating = "useful" | "not_useful";

export interface CardState {
  task: TaskView;
  rating: Rating | null;
  /** Meaningless implies not-useful; kept as a tag for future export. */
  meaningless: boolean;
}

export type Phase = "review" | "submitting" | "terminal";

export interface ReviewState {
  phase: Phase;
  iteration: number;
  cards: CardState[];
  usefulTally: number;
  idempotencyKey: string;
  error: string | null;
}

export function tallyFromHistory(history: HistoryResponse): number {
  let total = 0;
  for (const it of history.iterations) {
    for (const value of Object.values(it.ratings)) total += value;
  }
  return total;
}

export function stateFromBatch(
  batch: BatchResponse,
  usefulTally: number,
  keyNonce: string,
): ReviewState {
  if (batch.terminal) {
    return {
      phase: "terminal",
      iteration: batch.iteration,
      cards: [],
      usefulTally,
      idempotencyKey: "",
      error: null,
    };
  }
  return {
    phase: "review",
    iteration: batch.iteration,
    cards: batch.tasks.map((task) => ({ task, rating: null, meaningless: false })),
    usefulTally,
    // Stable per batch: a double submit reuses the same key and the server
    // absorbs the duplicate.
    idempotencyKey: `${batch.session_id}:${batch.iteration}:${keyNonce}`,
    error: null,
  };
}

function withCard(
  state: ReviewState,
  taskId: string,
  update: (card: CardState) => CardState,
): ReviewState {
  return {
    ...state,
    cards: state.cards.map((card) =>
      card.task.task_id === taskId ? update(card) : card,
    ),
  };
}

export function setRating(state: ReviewState, taskId: string, rating: Rating): ReviewState {
  return withCard(state, taskId, (card) => ({
    ...card,
    rating,
    meaningless: rating === "useful" ? false : card.meaningless,
  }));
}

export function markMeaningless(state: ReviewState, taskId: string): ReviewState {
  return withCard(state, taskId, (card) => ({
    ...card,
    rating: "not_useful",
    meaningless: !card.meaningless,
  }));
}

export function fillRemainingNotUseful(state: ReviewState): ReviewState {
  return {
    ...state,
    cards: state.cards.map((card) =>
      card.rating === null ? { ...card, rating: "not_useful" } : card,
    ),
  };
}

export function allResolved(state: ReviewState): boolean {
  return state.cards.length > 0 && state.cards.every((card) => card.rating !== null);
}

export function ratingsPayload(state: ReviewState): RatingSubmission[] {
  return state.cards.map((card) => ({
    task_id: card.task.task_id,
    rating: card.rating === "useful" ? 1 : 0,
  }));
}

export function usefulInBatch(state: ReviewState): number {
  return state.cards.filter((card) => card.rating === "useful").length;
}

export function meaninglessTags(state: ReviewState): string[] {
  return state.cards.filter((card) => card.meaningless).map((card) => card.task.task_id);
}

export function attachReport(state: ReviewState, task: TaskView): ReviewState {
  return withCard(state, task.task_id, (card) => ({ ...card, task }));
}

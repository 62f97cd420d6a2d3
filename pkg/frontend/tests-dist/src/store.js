/** Pure state for the review loop.
 *
 * The visible state is a function of (server history, unsubmitted local
 * ratings): history fixes the iteration counter and useful tally, the open
 * batch fixes the cards, and only the local rating choices live here until
 * they are submitted.
 */
export function tallyFromHistory(history) {
    let total = 0;
    for (const it of history.iterations) {
        for (const value of Object.values(it.ratings))
            total += value;
    }
    return total;
}
export function stateFromBatch(batch, usefulTally, keyNonce) {
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
function withCard(state, taskId, update) {
    return {
        ...state,
        cards: state.cards.map((card) => card.task.task_id === taskId ? update(card) : card),
    };
}
export function setRating(state, taskId, rating) {
    return withCard(state, taskId, (card) => ({
        ...card,
        rating,
        meaningless: rating === "useful" ? false : card.meaningless,
    }));
}
export function markMeaningless(state, taskId) {
    return withCard(state, taskId, (card) => ({
        ...card,
        rating: "not_useful",
        meaningless: !card.meaningless,
    }));
}
export function fillRemainingNotUseful(state) {
    return {
        ...state,
        cards: state.cards.map((card) => card.rating === null ? { ...card, rating: "not_useful" } : card),
    };
}
export function allResolved(state) {
    return state.cards.length > 0 && state.cards.every((card) => card.rating !== null);
}
export function ratingsPayload(state) {
    return state.cards.map((card) => ({
        task_id: card.task.task_id,
        rating: card.rating === "useful" ? 1 : 0,
    }));
}
export function usefulInBatch(state) {
    return state.cards.filter((card) => card.rating === "useful").length;
}
export function meaninglessTags(state) {
    return state.cards.filter((card) => card.meaningless).map((card) => card.task.task_id);
}
export function attachReport(state, task) {
    return withCard(state, task.task_id, (card) => ({ ...card, task }));
}

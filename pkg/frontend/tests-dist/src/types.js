/** Wire types for the taskforge JSON API. */
export {};

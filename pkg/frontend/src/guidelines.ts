/** Labeling guidance shown beside every pair. */

export const RELEVANCE_GUIDELINE =
  "Mark a pair relevant only when the post talks about the same events " +
  "as the claim and names the same people, places, or organizations. " +
  "Sharing a broad topic is not enough: if the post does not commit to " +
  "the claim's specifics, choose not relevant.";

export const KEY_HELP =
  "R marks relevant, N marks not relevant, U reopens your last label " +
  "while its lease lasts.";

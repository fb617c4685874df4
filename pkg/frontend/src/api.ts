/**
 * Typed client for the annotation service.
 *
 * Thin and stateless: each method maps onto one route and returns a
 * discriminated result for the outcomes the flow has to branch on
 * (204 exhaustion, 409 conflicts). Transport failures reject; callers
 * decide whether to retry. Nothing is queued client-side.
 */

export type LabelValue = "relevant" | "not_relevant";

/** One candidate pair as served to an annotator. */
export interface PairCard {
  tweetId: string;
  claimId: string;
  tweetText: string;
  claimText: string;
  claimVerdict: string;
  similarity: number;
  rank: number;
  /** ISO timestamp; the server holds this pair for us until then. */
  leaseExpiresAt: string;
}

export interface Progress {
  labeled: number;
  total: number;
  relevant: number;
  notRelevant: number;
  perAnnotator: Record<string, number>;
  claimsCovered: number;
  claimsTotal: number;
}

export interface LabelReceipt {
  tweetId: string;
  claimId: string;
  label: LabelValue;
  annotator: string;
  labeledAt: string | null;
}

export type NextPairResult =
  | { kind: "pair"; card: PairCard }
  | { kind: "exhausted" };

export type LabelResult =
  | { kind: "ok"; receipt: LabelReceipt }
  | { kind: "conflict"; message: string }
  | { kind: "rejected"; code: string; message: string };

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function errorBody(
  response: Response,
): Promise<{ code: string; message: string }> {
  try {
    const doc: unknown = await response.json();
    if (
      typeof doc === "object" &&
      doc !== null &&
      typeof (doc as Record<string, unknown>).code === "string" &&
      typeof (doc as Record<string, unknown>).message === "string"
    ) {
      return doc as { code: string; message: string };
    }
  } catch {
    // non-JSON error body; fall through to the generic shape
  }
  return { code: "unexpected", message: `status ${response.status}` };
}

export class ConsoleApi {
  private readonly fetchImpl: FetchLike;

  constructor(
    private readonly baseUrl: string,
    fetchImpl?: FetchLike,
  ) {
    // Browsers require fetch to be called on globalThis.
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private url(path: string): string {
    return this.baseUrl.replace(/\/+$/, "") + path;
  }

  async nextPair(annotator: string): Promise<NextPairResult> {
    const response = await this.fetchImpl(
      this.url(`/pairs/next?annotator=${encodeURIComponent(annotator)}`),
    );
    if (response.status === 204) {
      return { kind: "exhausted" };
    }
    if (!response.ok) {
      const err = await errorBody(response);
      throw new ApiError(response.status, err.code, err.message);
    }
    const doc = await response.json();
    return {
      kind: "pair",
      card: {
        tweetId: doc.tweet_id,
        claimId: doc.claim_id,
        tweetText: doc.tweet_text,
        claimText: doc.claim_text,
        claimVerdict: doc.claim_verdict,
        similarity: doc.similarity,
        rank: doc.rank,
        leaseExpiresAt: doc.lease_expires_at,
      },
    };
  }

  async submitLabel(
    tweetId: string,
    claimId: string,
    label: LabelValue,
    annotator: string,
    relabel = false,
  ): Promise<LabelResult> {
    const path =
      `/pairs/${encodeURIComponent(tweetId)}/` +
      `${encodeURIComponent(claimId)}/label`;
    const response = await this.fetchImpl(this.url(path), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ label, annotator, relabel }),
    });
    if (response.status === 409) {
      const err = await errorBody(response);
      return { kind: "conflict", message: err.message };
    }
    if (!response.ok) {
      const err = await errorBody(response);
      return { kind: "rejected", code: err.code, message: err.message };
    }
    const doc = await response.json();
    return {
      kind: "ok",
      receipt: {
        tweetId: doc.tweet_id,
        claimId: doc.claim_id,
        label: doc.label,
        annotator: doc.annotator,
        labeledAt: doc.labeled_at,
      },
    };
  }

  async progress(): Promise<Progress> {
    const response = await this.fetchImpl(this.url("/progress"));
    if (!response.ok) {
      const err = await errorBody(response);
      throw new ApiError(response.status, err.code, err.message);
    }
    const doc = await response.json();
    return {
      labeled: doc.labeled,
      total: doc.total,
      relevant: doc.relevant,
      notRelevant: doc.not_relevant,
      perAnnotator: doc.per_annotator ?? {},
      claimsCovered: doc.claims_covered,
      claimsTotal: doc.claims_total,
    };
  }
}

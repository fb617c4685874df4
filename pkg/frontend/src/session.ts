/**
 * Annotator session state machine, free of any DOM concern.
 *
 * Implements the label flow: fetch a pair, submit a decision,
 * auto-advance. A 409 means somebody else got there first; the pair is
 * skipped with a notice. Undo is lease-scoped: the last submitted label
 * can be reopened with one keystroke until its pair's lease stamp
 * passes, after which the pair is only reachable by an explicit
 * relabel against the API. Nothing here survives a reload; the ground
 * truth lives server-side only.
 */

import {
  ConsoleApi,
  LabelValue,
  PairCard,
  Progress,
} from "./api.js";

export type Phase =
  | { kind: "idle" }
  | { kind: "labeling"; card: PairCard; relabel: boolean }
  | { kind: "done"; totals: Progress | null }
  | { kind: "failed"; message: string };

export interface Notice {
  tone: "info" | "warn";
  text: string;
}

interface LastLabel {
  card: PairCard;
  label: LabelValue;
}

function describe(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}

export class AnnotationSession {
  phase: Phase = { kind: "idle" };
  notice: Notice | null = null;
  /** New labels this session; relabels do not count twice. */
  labeledThisSession = 0;
  private last: LastLabel | null = null;

  constructor(
    private readonly api: ConsoleApi,
    readonly annotator: string,
    private readonly clock: () => number = () => Date.now(),
  ) {
    if (!annotator.trim()) {
      throw new Error("annotator name must be non-empty");
    }
  }

  async start(): Promise<Phase> {
    return this.advance();
  }

  /** After a transport failure, try the same read again. */
  async retry(): Promise<Phase> {
    if (this.phase.kind !== "failed") {
      return this.phase;
    }
    return this.advance();
  }

  private async advance(): Promise<Phase> {
    try {
      const next = await this.api.nextPair(this.annotator);
      if (next.kind === "exhausted") {
        let totals: Progress | null = null;
        try {
          totals = await this.api.progress();
        } catch {
          totals = null;
        }
        this.phase = { kind: "done", totals };
      } else {
        this.phase = { kind: "labeling", card: next.card, relabel: false };
      }
    } catch (err) {
      this.phase = { kind: "failed", message: describe(err) };
    }
    return this.phase;
  }

  async submit(label: LabelValue): Promise<Phase> {
    if (this.phase.kind !== "labeling") {
      return this.phase;
    }
    const { card, relabel } = this.phase;
    const result = await this.api.submitLabel(
      card.tweetId,
      card.claimId,
      label,
      this.annotator,
      relabel,
    );
    if (result.kind === "ok") {
      this.notice = null;
      if (relabel) {
        this.last = null;
      } else {
        this.labeledThisSession += 1;
        this.last = { card, label };
      }
      return this.advance();
    }
    if (result.kind === "conflict") {
      this.notice = { tone: "warn", text: "already labeled, skipping" };
      return this.advance();
    }
    this.phase = {
      kind: "failed",
      message: `${result.code}: ${result.message}`,
    };
    return this.phase;
  }

  /** The undo window: open until the last pair's lease stamp passes. */
  canUndo(): boolean {
    if (this.last === null) {
      return false;
    }
    const until = Date.parse(this.last.card.leaseExpiresAt);
    return Number.isFinite(until) && this.clock() < until;
  }

  lastLabel(): LabelValue | null {
    return this.last === null ? null : this.last.label;
  }

  /** Reopen the last labeled pair; its next submit goes out as a relabel. */
  undo(): Phase {
    if (!this.canUndo() || this.last === null) {
      return this.phase;
    }
    this.phase = { kind: "labeling", card: this.last.card, relabel: true };
    this.last = null;
    return this.phase;
  }
}

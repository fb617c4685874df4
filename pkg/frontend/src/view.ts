/**
 * DOM rendering. Every server-sourced string goes through textContent,
 * never through innerHTML, so tweet and claim texts render inert. The
 * label buttons stay disabled until both texts of the current card are
 * painted.
 */

import { PairCard, Progress } from "./api.js";
import { Notice, Phase } from "./session.js";
import { ProgressView, percentLabeled } from "./progress.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (el === null) {
    throw new Error(`missing element #${id}`);
  }
  return el as T;
}

function show(el: HTMLElement, on: boolean): void {
  el.classList.toggle("hidden", !on);
}

export interface ViewElements {
  signin: HTMLElement;
  annotatorInput: HTMLInputElement;
  startButton: HTMLButtonElement;
  workspace: HTMLElement;
  notice: HTMLElement;
  tweetText: HTMLElement;
  claimText: HTMLElement;
  claimVerdict: HTMLElement;
  pairRank: HTMLElement;
  pairSimilarity: HTMLElement;
  relabelFlag: HTMLElement;
  relevantButton: HTMLButtonElement;
  notRelevantButton: HTMLButtonElement;
  undoButton: HTMLButtonElement;
  guideline: HTMLElement;
  keyHelp: HTMLElement;
  completion: HTMLElement;
  totals: HTMLElement;
  failure: HTMLElement;
  failureText: HTMLElement;
  retryButton: HTMLButtonElement;
  progressFill: HTMLElement;
  progressText: HTMLElement;
  staleBadge: HTMLElement;
  annotatorRows: HTMLElement;
}

export function collectElements(): ViewElements {
  return {
    signin: byId("signin"),
    annotatorInput: byId<HTMLInputElement>("annotator"),
    startButton: byId<HTMLButtonElement>("start"),
    workspace: byId("workspace"),
    notice: byId("notice"),
    tweetText: byId("tweet-text"),
    claimText: byId("claim-text"),
    claimVerdict: byId("claim-verdict"),
    pairRank: byId("pair-rank"),
    pairSimilarity: byId("pair-similarity"),
    relabelFlag: byId("relabel-flag"),
    relevantButton: byId<HTMLButtonElement>("btn-relevant"),
    notRelevantButton: byId<HTMLButtonElement>("btn-not-relevant"),
    undoButton: byId<HTMLButtonElement>("btn-undo"),
    guideline: byId("guideline"),
    keyHelp: byId("key-help"),
    completion: byId("completion"),
    totals: byId("totals"),
    failure: byId("failure"),
    failureText: byId("failure-text"),
    retryButton: byId<HTMLButtonElement>("btn-retry"),
    progressFill: byId("progress-fill"),
    progressText: byId("progress-text"),
    staleBadge: byId("stale-badge"),
    annotatorRows: byId("annotator-rows"),
  };
}

function renderCard(els: ViewElements, card: PairCard, relabel: boolean): void {
  els.relevantButton.disabled = true;
  els.notRelevantButton.disabled = true;
  els.tweetText.textContent = card.tweetText;
  els.claimText.textContent = card.claimText;
  els.claimVerdict.textContent = card.claimVerdict;
  els.pairRank.textContent = String(card.rank);
  els.pairSimilarity.textContent = card.similarity.toFixed(3);
  show(els.relabelFlag, relabel);
  // Both texts are in the tree now; labeling may open.
  els.relevantButton.disabled = false;
  els.notRelevantButton.disabled = false;
}

function renderTotals(els: ViewElements, totals: Progress | null): void {
  els.totals.textContent = "";
  if (totals === null) {
    const dt = document.createElement("dt");
    dt.textContent = "totals unavailable";
    els.totals.appendChild(dt);
    return;
  }
  const rows: Array<[string, string]> = [
    ["labeled", `${totals.labeled} of ${totals.total}`],
    ["relevant", String(totals.relevant)],
    ["not relevant", String(totals.notRelevant)],
    ["claims covered", `${totals.claimsCovered} of ${totals.claimsTotal}`],
  ];
  for (const [name, value] of rows) {
    const dt = document.createElement("dt");
    dt.textContent = name;
    const dd = document.createElement("dd");
    dd.textContent = value;
    els.totals.appendChild(dt);
    els.totals.appendChild(dd);
  }
}

export function renderPhase(
  els: ViewElements,
  phase: Phase,
  notice: Notice | null,
  canUndo: boolean,
): void {
  show(els.signin, phase.kind === "idle");
  show(els.workspace, phase.kind === "labeling");
  show(els.completion, phase.kind === "done");
  show(els.failure, phase.kind === "failed");
  els.undoButton.disabled = !canUndo;
  if (phase.kind === "labeling") {
    renderCard(els, phase.card, phase.relabel);
  } else if (phase.kind === "done") {
    renderTotals(els, phase.totals);
  } else if (phase.kind === "failed") {
    els.failureText.textContent = phase.message;
  }
  show(els.notice, notice !== null);
  els.notice.textContent = notice === null ? "" : notice.text;
  els.notice.classList.toggle("warn", notice !== null && notice.tone === "warn");
}

export function renderProgress(els: ViewElements, view: ProgressView): void {
  show(els.staleBadge, view.stale);
  if (view.values === null) {
    els.progressText.textContent = "no data yet";
    els.progressFill.style.width = "0%";
    return;
  }
  const p = view.values;
  const pct = percentLabeled(p);
  els.progressFill.style.width = `${pct}%`;
  els.progressText.textContent = `${p.labeled} of ${p.total} labeled (${pct}%)`;
  els.annotatorRows.textContent = "";
  for (const [name, count] of Object.entries(p.perAnnotator)) {
    const row = document.createElement("tr");
    const who = document.createElement("td");
    who.textContent = name;
    const n = document.createElement("td");
    n.textContent = String(count);
    row.appendChild(who);
    row.appendChild(n);
    els.annotatorRows.appendChild(row);
  }
}

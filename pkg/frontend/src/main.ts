/**
 * Entry point: wires the session, the poller, and the keyboard to the
 * page. The only state that survives a reload is the annotator name in
 * localStorage; everything else is refetched from the service.
 */

import { ConsoleApi } from "./api.js";
import { AnnotationSession } from "./session.js";
import { ProgressPoller } from "./progress.js";
import { KEY_HELP, RELEVANCE_GUIDELINE } from "./guidelines.js";
import { collectElements, renderPhase, renderProgress } from "./view.js";

const POLL_INTERVAL_MS = 5000;
const NAME_KEY = "annotator-name";

function serviceBaseUrl(): string {
  // The bundle is served at /console; the API lives at the site root.
  return window.location.origin;
}

function boot(): void {
  const els = collectElements();
  els.guideline.textContent = RELEVANCE_GUIDELINE;
  els.keyHelp.textContent = KEY_HELP;

  const api = new ConsoleApi(serviceBaseUrl());
  const poller = new ProgressPoller(api, (view) => renderProgress(els, view));
  poller.start(POLL_INTERVAL_MS);

  let session: AnnotationSession | null = null;

  const paint = (): void => {
    if (session !== null) {
      renderPhase(els, session.phase, session.notice, session.canUndo());
    }
  };

  const start = async (): Promise<void> => {
    const name = els.annotatorInput.value.trim();
    if (!name) {
      els.annotatorInput.focus();
      return;
    }
    window.localStorage.setItem(NAME_KEY, name);
    session = new AnnotationSession(api, name);
    await session.start();
    paint();
  };

  const act = async (fn: () => Promise<unknown> | unknown): Promise<void> => {
    await fn();
    paint();
    void poller.tick();
  };

  els.annotatorInput.value = window.localStorage.getItem(NAME_KEY) ?? "";
  els.startButton.addEventListener("click", () => void start());
  els.annotatorInput.addEventListener("keydown", (event) => {
    if (event.key === "Enter") {
      void start();
    }
  });
  els.relevantButton.addEventListener("click", () => {
    void act(() => session?.submit("relevant"));
  });
  els.notRelevantButton.addEventListener("click", () => {
    void act(() => session?.submit("not_relevant"));
  });
  els.undoButton.addEventListener("click", () => {
    void act(() => session?.undo());
  });
  els.retryButton.addEventListener("click", () => {
    void act(() => session?.retry());
  });

  document.addEventListener("keydown", (event) => {
    if (session === null || event.target === els.annotatorInput) {
      return;
    }
    const key = event.key.toLowerCase();
    if (key === "r") {
      void act(() => session?.submit("relevant"));
    } else if (key === "n") {
      void act(() => session?.submit("not_relevant"));
    } else if (key === "u") {
      void act(() => session?.undo());
    }
  });
}

document.addEventListener("DOMContentLoaded", boot);

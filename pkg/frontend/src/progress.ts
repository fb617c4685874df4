/**
 * Progress polling with stale-data tracking: a failed poll keeps the
 * last good values and raises the stale flag instead of blanking the
 * view.
 */

import { ConsoleApi, Progress } from "./api.js";

export interface ProgressView {
  values: Progress | null;
  stale: boolean;
}

export class ProgressPoller {
  view: ProgressView = { values: null, stale: false };

  constructor(
    private readonly api: ConsoleApi,
    private readonly onChange: (view: ProgressView) => void = () => {},
  ) {}

  async tick(): Promise<ProgressView> {
    try {
      this.view = { values: await this.api.progress(), stale: false };
    } catch {
      this.view = { values: this.view.values, stale: true };
    }
    this.onChange(this.view);
    return this.view;
  }

  /** Poll now and on an interval; returns a stop function. */
  start(intervalMs: number): () => void {
    void this.tick();
    const handle = setInterval(() => {
      void this.tick();
    }, intervalMs);
    return () => clearInterval(handle);
  }
}

export function percentLabeled(progress: Progress): number {
  if (progress.total === 0) {
    return 0;
  }
  return Math.round((100 * progress.labeled) / progress.total);
}

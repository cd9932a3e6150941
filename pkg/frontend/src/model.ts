import type { TutorClient } from "./api.js";
import type { ClickResult, RouteResult, TrialView } from "./types.js";

/** Format a score the way the scoreboard shows it: to the cent. */
export function fmtScore(x: number): string {
  return x.toFixed(2);
}

/** Client-side state for one trial.
 *
 * Every number displayed (revealed values, click count, running score)
 * comes from a server response; the model never peeks at ground truth.
 * Mutations are serialized: at most one in-flight request at a time.
 */
export class TrialModel {
  view: TrialView;
  routeResult: RouteResult | null = null;
  lastClick: ClickResult | null = null;
  private inflight = false;

  constructor(
    private client: TutorClient,
    private session: string,
    readonly trial: number,
    view: TrialView,
  ) {
    this.view = view;
  }

  static async load(client: TutorClient, session: string, trial: number) {
    const view = await client.getTrial(session, trial);
    return new TrialModel(client, session, trial, view);
  }

  get revealed(): Map<number, number> {
    return new Map(
      Object.entries(this.view.revealed).map(([n, v]) => [Number(n), v]),
    );
  }

  get score(): number {
    return this.routeResult ? this.routeResult.score : this.view.score;
  }

  get scoreDisplay(): string {
    return fmtScore(this.score);
  }

  get done(): boolean {
    return this.routeResult !== null || this.view.route_submitted;
  }

  isRevealed(node: number): boolean {
    return String(node) in this.view.revealed;
  }

  private async mutate<T>(run: () => Promise<T>): Promise<T> {
    if (this.inflight) throw new Error("a request is already in flight");
    this.inflight = true;
    try {
      return await run();
    } finally {
      this.inflight = false;
    }
  }

  /** Reveal one node; the painted value is the server's, verbatim. */
  click(node: number): Promise<ClickResult> {
    return this.mutate(async () => {
      const res = await this.client.click(this.session, this.trial, node);
      this.view.revealed[String(res.node)] = res.revealed;
      this.view.clicks = res.clicks;
      this.lastClick = res;
      return res;
    });
  }

  /** Submit the flown route; closes the trial and fixes its rr. */
  submitRoute(path: number[]): Promise<RouteResult> {
    return this.mutate(async () => {
      const res = await this.client.submitRoute(this.session, this.trial, path);
      this.routeResult = res;
      return res;
    });
  }
}

import type { EnvView } from "./types.js";

/** Step-by-step route entry constrained to the environment's edges.
 *
 * The picker walks from the root: arrow keys cycle the legal next hops,
 * Enter/ArrowRight advances, ArrowLeft backtracks. Clicking a node is the
 * same as advancing to it and is refused off the legal set.
 */
export class RoutePicker {
  private children = new Map<number, number[]>();
  path: number[];
  highlight = 0;

  constructor(readonly env: EnvView) {
    for (const [a, b] of env.edges) {
      const kids = this.children.get(a) ?? [];
      kids.push(b);
      this.children.set(a, kids);
    }
    for (const kids of this.children.values()) kids.sort((x, y) => x - y);
    this.path = [env.root];
  }

  get position(): number {
    return this.path[this.path.length - 1];
  }

  get complete(): boolean {
    return this.env.goals.includes(this.position);
  }

  /** Legal next hops from the current position, ascending. */
  candidates(): number[] {
    return this.complete ? [] : (this.children.get(this.position) ?? []);
  }

  get highlighted(): number | null {
    const c = this.candidates();
    return c.length ? c[this.highlight % c.length] : null;
  }

  cycle(delta: number): void {
    const c = this.candidates();
    if (!c.length) return;
    this.highlight = (this.highlight + delta + c.length) % c.length;
  }

  canAdvance(node: number): boolean {
    return this.candidates().includes(node);
  }

  advance(node: number): void {
    if (!this.canAdvance(node)) {
      throw new Error(`no edge ${this.position} -> ${node}`);
    }
    this.path.push(node);
    this.highlight = 0;
  }

  back(): void {
    if (this.path.length > 1) this.path.pop();
    this.highlight = 0;
  }

  reset(): void {
    this.path = [this.env.root];
    this.highlight = 0;
  }

  /** Apply one keyboard event; returns true when the key was consumed. */
  key(k: string): boolean {
    switch (k) {
      case "ArrowUp":
        this.cycle(-1);
        return true;
      case "ArrowDown":
        this.cycle(1);
        return true;
      case "ArrowRight":
      case "Enter": {
        const h = this.highlighted;
        if (h !== null) this.advance(h);
        return true;
      }
      case "ArrowLeft":
        this.back();
        return true;
      default:
        return false;
    }
  }
}

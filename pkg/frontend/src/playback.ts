import type { DemoStep, DemoTrace } from "./types.js";

export type Badge = "goal-setting" | "path-planning" | "switch";

/** One renderable moment of a demonstration. */
export interface Frame {
  index: number;
  step: DemoStep;
  /** 1-based position in the click sequence (the number drawn beside the
   * node) or in the flown route for move steps. */
  ordinal: number;
  badge: Badge;
  /** Values revealed up to and including this step. */
  revealed: Map<number, number>;
  /** Route flown up to and including this step. */
  path: number[];
}

/** Precompute every frame of a demonstration. Pure in the trace: same
 * trace, same frames — playback adds no randomness of its own. */
export function buildFrames(trace: DemoTrace): Frame[] {
  const frames: Frame[] = [];
  const revealed = new Map<number, number>();
  const path: number[] = [];
  let clickOrdinal = 0;
  let moveOrdinal = 0;
  trace.steps.forEach((step, index) => {
    let ordinal: number;
    if (step.kind === "click") {
      ordinal = ++clickOrdinal;
      revealed.set(step.node, step.revealed as number);
    } else {
      ordinal = ++moveOrdinal;
      path.push(step.node);
    }
    frames.push({
      index,
      step,
      ordinal,
      badge: step.annotation,
      revealed: new Map(revealed),
      path: [...path],
    });
  });
  return frames;
}

/** The closing card: the flown route and the episode's score. */
export function finalFrame(trace: DemoTrace) {
  return { path: [...trace.path], score: trace.score };
}

/** A cursor over the frames with pause/seek.
 *
 * `advance` only moves forward; rewinding is an explicit `seek`. The
 * cursor starts at -1 ("nothing shown yet").
 */
export class DemoPlayback {
  readonly frames: Frame[];
  cursor = -1;
  playing = false;
  speed: number;

  constructor(readonly trace: DemoTrace, speed = 1) {
    this.frames = buildFrames(trace);
    this.speed = speed;
  }

  get current(): Frame | null {
    return this.cursor >= 0 ? this.frames[this.cursor] : null;
  }

  get finished(): boolean {
    return this.cursor >= this.frames.length - 1;
  }

  /** Milliseconds until the next frame at the current speed. */
  get frameDelay(): number {
    return 700 / this.speed;
  }

  play(): void {
    this.playing = true;
  }

  pause(): void {
    this.playing = false;
  }

  advance(): Frame | null {
    if (this.finished) {
      this.playing = false;
      return null;
    }
    this.cursor += 1;
    return this.frames[this.cursor];
  }

  seek(index: number): void {
    if (index < -1 || index >= this.frames.length) {
      throw new Error(`seek out of range: ${index}`);
    }
    this.cursor = index;
  }

  get final() {
    return finalFrame(this.trace);
  }
}

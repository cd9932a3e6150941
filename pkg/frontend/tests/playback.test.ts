import { describe, expect, it } from "vitest";
import { buildFrames, DemoPlayback, finalFrame } from "../src/playback.js";
import type { DemoTrace } from "../src/types.js";

const trace: DemoTrace = {
  env: "highrisk",
  seed: 3,
  curriculum: "full",
  steps: [
    { kind: "click", node: 15, revealed: 50, annotation: "goal-setting" },
    { kind: "click", node: 30, revealed: 100, annotation: "goal-setting" },
    { kind: "click", node: 23, revealed: -1500, annotation: "path-planning" },
    { kind: "click", node: 8, revealed: 0, annotation: "switch" },
    { kind: "move", node: 1, revealed: null, annotation: "path-planning" },
    { kind: "move", node: 2, revealed: null, annotation: "path-planning" },
    { kind: "move", node: 15, revealed: null, annotation: "path-planning" },
  ],
  score: 43.5,
  path: [1, 2, 15],
  clicks: 4,
  switches: 1,
  committed_goals: [30, 15],
};

describe("buildFrames", () => {
  it("numbers clicks 1..K in served order", () => {
    const frames = buildFrames(trace);
    const clicks = frames.filter((f) => f.step.kind === "click");
    expect(clicks.map((f) => f.ordinal)).toEqual([1, 2, 3, 4]);
    expect(clicks.map((f) => f.step.node)).toEqual([15, 30, 23, 8]);
  });

  it("keeps badges exactly on the annotated steps", () => {
    const frames = buildFrames(trace);
    const switches = frames.filter((f) => f.badge === "switch");
    expect(switches.map((f) => f.index)).toEqual([3]);
    expect(frames.map((f) => f.badge)).toEqual(
      trace.steps.map((s) => s.annotation),
    );
  });

  it("accumulates reveals and route without inventing values", () => {
    const frames = buildFrames(trace);
    expect(frames[2].revealed.get(23)).toBe(-1500);
    expect(frames[1].revealed.has(23)).toBe(false);
    expect(frames[6].path).toEqual([1, 2, 15]);
    expect(frames[4].path).toEqual([1]);
  });

  it("is a pure function of the trace", () => {
    expect(buildFrames(trace)).toEqual(buildFrames(trace));
  });
});

describe("DemoPlayback", () => {
  it("advances the cursor monotonically to the end", () => {
    const p = new DemoPlayback(trace);
    const seen: number[] = [];
    p.play();
    for (;;) {
      const f = p.advance();
      if (!f) break;
      seen.push(f.index);
    }
    expect(seen).toEqual([0, 1, 2, 3, 4, 5, 6]);
    expect(p.finished).toBe(true);
    expect(p.playing).toBe(false);
  });

  it("supports pause and bounded seek", () => {
    const p = new DemoPlayback(trace);
    p.play();
    p.advance();
    p.pause();
    expect(p.playing).toBe(false);
    p.seek(5);
    expect(p.current?.index).toBe(5);
    p.seek(-1);
    expect(p.current).toBeNull();
    expect(() => p.seek(7)).toThrow();
    expect(() => p.seek(-2)).toThrow();
  });

  it("speed only scales the frame delay", () => {
    expect(new DemoPlayback(trace, 2).frameDelay).toBe(
      new DemoPlayback(trace, 1).frameDelay / 2,
    );
  });

  it("final frame shows the route and the score", () => {
    expect(finalFrame(trace)).toEqual({ path: [1, 2, 15], score: 43.5 });
  });
});

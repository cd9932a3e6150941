import { type ChildProcess, spawn } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { TutorClient } from "../src/api.js";
import { fmtScore, TrialModel } from "../src/model.js";
import { buildFrames, DemoPlayback } from "../src/playback.js";
import { RoutePicker } from "../src/route.js";

/** These tests run the real tutor service (the Python package must be
 * installed) and drive it exactly as the browser client does. */

const PORT = 8930 + (process.pid % 50);
const BASE = `http://127.0.0.1:${PORT}`;

const SERVER = `
import sys, tempfile
from pathlib import Path
import uvicorn
from metaplan.policies import PolicyConfig, Weights
from metaplan.tutor import ServiceConfig, create_app, prepare_oracle

data_dir = tempfile.mkdtemp()
prepare_oracle("builtin:feedback_demo", data_dir)
# a goal-switching demonstration policy, served by config-file path
switcher = PolicyConfig(
    "hier_bmps", high=Weights("high", (0.5, 0.5), 1.0),
    low=Weights("low", (0.0, 0.5, 0.5), 1.0),
    switching=True, low_cost_mode="plain")
switcher.save(Path(data_dir) / "switcher.json")
print(data_dir, flush=True)
app = create_app(ServiceConfig(data_dir=data_dir))
uvicorn.run(app, host="127.0.0.1", port=int(sys.argv[1]), log_level="warning")
`;

let proc: ChildProcess;
let stderr = "";
let dataDir = "";

beforeAll(async () => {
  proc = spawn("python3", ["-c", SERVER, String(PORT)], {
    stdio: ["ignore", "pipe", "pipe"],
  });
  proc.stdout!.on("data", (c) => (dataDir += String(c).trim()));
  proc.stderr!.on("data", (c) => (stderr += c));
  const deadline = Date.now() + 45_000;
  for (;;) {
    if (proc.exitCode !== null) {
      throw new Error(`service exited early:\n${stderr}`);
    }
    try {
      const res = await fetch(`${BASE}/sessions/nope/trials/0`);
      if (res.status === 404) break;
    } catch {
      /* not listening yet */
    }
    if (Date.now() > deadline) {
      throw new Error(`service never came up:\n${stderr}`);
    }
    await new Promise((r) => setTimeout(r, 300));
  }
});

afterAll(() => {
  proc?.kill();
});

describe("end-to-end trial", () => {
  it("displays exactly the server's rr after 3 clicks and a route", async () => {
    const client = new TutorClient(BASE);
    const info = await client.createSession({
      condition: "practice",
      env: "builtin:feedback_demo",
      seed: 7,
      trials: 1,
    });
    const model = await TrialModel.load(client, info.id, 0);
    const env = model.view.env;

    const clickable = [];
    for (let n = 0; n < env.node_count; n++) {
      if (n !== env.root && !(String(n) in env.fixed)) clickable.push(n);
    }
    for (const node of clickable.slice(0, 3)) {
      const res = await model.click(node);
      expect(model.revealed.get(node)).toBe(res.revealed);
    }
    expect(model.view.clicks).toBe(3);

    const picker = new RoutePicker(env);
    while (!picker.complete) {
      picker.key("Enter"); // fly the first legal hop each time
    }
    const res = await model.submitRoute(picker.path);

    // the scoreboard shows the model's score: the server's rr, to the cent
    expect(model.scoreDisplay).toBe(fmtScore(res.rr));
    const after = await client.getTrial(info.id, 0);
    expect(after.route_submitted).toBe(true);
    expect(fmtScore(after.score)).toBe(fmtScore(res.rr));
    expect(res.rr).toBe(res.path_return - 3 * env.click_cost);
  });

  it("grades an oracle-backed feedback click without penalty", async () => {
    const client = new TutorClient(BASE);
    const info = await client.createSession({
      condition: "feedback",
      env: "builtin:feedback_demo",
      seed: 1,
      trials: 1,
    });
    const model = await TrialModel.load(client, info.id, 0);
    const env = model.view.env;
    const clickable = [];
    for (let n = 0; n < env.node_count; n++) {
      if (n !== env.root && !(String(n) in env.fixed)) clickable.push(n);
    }
    let sawFeedback = false;
    for (const node of clickable) {
      const res = await model.click(node);
      expect(res.feedback).not.toBeNull();
      expect(res.feedback!.penalty_ms).toBe(
        Math.round(500 * res.feedback!.regret),
      );
      if (res.feedback!.is_optimal) {
        expect(res.feedback!.penalty_ms).toBe(0);
        sawFeedback = true;
      }
    }
    expect(sawFeedback).toBe(true);
  });
});

describe("served demonstrations", () => {
  it("playback ordinals and switch badges match the served trace", async () => {
    const client = new TutorClient(BASE);
    const switcher = `${dataDir}/switcher.json`;
    let demo = null;
    for (let seed = 0; seed < 120; seed++) {
      const d = await client.getDemo({
        env: "builtin:highrisk",
        policy: switcher,
        seed,
        step: "full",
      });
      demo = d;
      if (d.switches > 0) break;
    }
    expect(demo!.switches).toBeGreaterThan(0);
    const frames = buildFrames(demo!);
    expect(frames.length).toBe(demo!.steps.length);

    const clickFrames = frames.filter((f) => f.step.kind === "click");
    expect(clickFrames.length).toBe(demo!.clicks);
    expect(clickFrames.map((f) => f.ordinal)).toEqual(
      clickFrames.map((_, i) => i + 1),
    );
    // ordinal order is the served click order, node for node
    expect(clickFrames.map((f) => f.step.node)).toEqual(
      demo!.steps.filter((s) => s.kind === "click").map((s) => s.node),
    );

    const badgeIdx = frames
      .filter((f) => f.badge === "switch")
      .map((f) => f.index);
    const annotatedIdx = demo!.steps
      .map((s, i) => (s.annotation === "switch" ? i : -1))
      .filter((i) => i >= 0);
    expect(badgeIdx).toEqual(annotatedIdx);

    const playback = new DemoPlayback(demo!);
    expect(playback.final.path).toEqual(demo!.path);
    expect(fmtScore(playback.final.score)).toBe(fmtScore(demo!.score));
    const moves = frames.filter((f) => f.step.kind === "move");
    expect(moves[moves.length - 1].path).toEqual(demo!.path);
  });
});

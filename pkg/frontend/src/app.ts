import { ApiError, TutorClient } from "./api.js";
import { fmtScore, TrialModel } from "./model.js";
import { DemoPlayback } from "./playback.js";
import { emptyState, frameToState, GraphView, toast } from "./render.js";
import { RoutePicker } from "./route.js";

function el<T extends HTMLElement>(id: string): T {
  return document.getElementById(id) as T;
}

/** Wire the page: one active session, one trial at a time, at most one
 * in-flight mutation (the model enforces it; the UI just disables). */
export async function boot() {
  const client = new TutorClient(
    (window as { TUTOR_URL?: string }).TUTOR_URL ?? "",
  );
  const graphHost = el<HTMLDivElement>("graph");
  const toasts = el<HTMLDivElement>("toasts");
  let model: TrialModel | null = null;
  let picker: RoutePicker | null = null;
  let view: GraphView | null = null;
  let trial = 0;

  const refresh = () => {
    if (!model || !picker || !view) return;
    const state = emptyState();
    state.revealed = model.revealed;
    state.routeSoFar = picker.path.slice(1);
    state.candidates = picker.candidates();
    state.highlighted = picker.highlighted;
    view.render(state);
    el("score").textContent = model.scoreDisplay;
    el("clicks").textContent = String(model.view.clicks);
    el("submit").toggleAttribute("disabled", !picker.complete || model.done);
  };

  const loadTrial = async (k: number) => {
    const session = el<HTMLInputElement>("session").value;
    model = await TrialModel.load(client, session, k);
    picker = new RoutePicker(model.view.env);
    view = new GraphView(graphHost, model.view.env);
    view.onNodeClick = async (node) => {
      if (!model || !picker) return;
      if (picker.canAdvance(node)) {
        picker.advance(node);
        refresh();
        return;
      }
      try {
        const res = await model.click(node);
        if (res.feedback && !res.feedback.is_optimal) {
          toast(toasts, `suboptimal: wait ${res.feedback.penalty_ms} ms ` +
            `(regret ${fmtScore(res.feedback.regret)})`);
          await new Promise((r) => setTimeout(r, res.feedback!.penalty_ms));
        }
      } catch (e) {
        toast(toasts, e instanceof ApiError ? e.message : String(e));
      }
      refresh();
    };
    el("trial-no").textContent = String(k);
    refresh();
  };

  el("start").addEventListener("click", async () => {
    try {
      const info = await client.createSession({
        condition: el<HTMLSelectElement>("condition").value,
        env: el<HTMLInputElement>("env").value,
        seed: Number(el<HTMLInputElement>("seed").value),
      });
      el<HTMLInputElement>("session").value = info.id;
      trial = 0;
      await loadTrial(trial);
    } catch (e) {
      toast(toasts, e instanceof ApiError ? e.message : String(e));
    }
  });

  el("submit").addEventListener("click", async () => {
    if (!model || !picker || !picker.complete) return;
    try {
      const res = await model.submitRoute(picker.path);
      el("score").textContent = fmtScore(res.score);
      toast(toasts, `route scored ${fmtScore(res.rr)}; ` +
        `${res.trials_remaining} trial(s) remaining`);
      if (res.trials_remaining > 0) await loadTrial(++trial);
    } catch (e) {
      toast(toasts, e instanceof ApiError ? e.message : String(e));
    }
  });

  window.addEventListener("keydown", (e) => {
    if (picker && !model?.done && picker.key(e.key)) {
      e.preventDefault();
      refresh();
    }
  });

  el("play-demo").addEventListener("click", async () => {
    try {
      const demo = await client.getDemo({
        env: el<HTMLInputElement>("env").value,
        policy: el<HTMLInputElement>("demo-policy").value,
        seed: Number(el<HTMLInputElement>("seed").value),
        step: el<HTMLSelectElement>("curriculum").value,
      });
      const playback = new DemoPlayback(demo);
      const demoView = new GraphView(graphHost, model?.view.env ?? {
        name: demo.env, node_count: Math.max(...demo.path) + 1, root: 0,
        edges: [], goals: [], click_cost: 1, fixed: {},
      });
      playback.play();
      const tick = () => {
        if (!playback.playing) return;
        const frame = playback.advance();
        if (!frame) {
          const fin = playback.final;
          el("demo-status").textContent =
            `route ${fin.path.join("->")} scored ${fmtScore(fin.score)}`;
          return;
        }
        demoView.render(frameToState(playback.frames, playback.cursor));
        el("demo-status").textContent =
          `step ${frame.index + 1}/${playback.frames.length} [${frame.badge}]`;
        setTimeout(tick, playback.frameDelay);
      };
      tick();
    } catch (e) {
      toast(toasts, e instanceof ApiError ? e.message : String(e));
    }
  });
}

boot();

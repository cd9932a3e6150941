import { layout, type NodePos } from "./layout.js";
import type { Frame } from "./playback.js";
import type { EnvView } from "./types.js";

const SVG = "http://www.w3.org/2000/svg";

export interface RenderState {
  revealed: Map<number, number>;
  routeSoFar: number[];
  candidates: number[];
  highlighted: number | null;
  ordinals: Map<number, number>;
  badges: Map<number, string>;
}

export function emptyState(): RenderState {
  return {
    revealed: new Map(),
    routeSoFar: [],
    candidates: [],
    highlighted: null,
    ordinals: new Map(),
    badges: new Map(),
  };
}

/** Pan/zoom SVG view of the DAG. Occluded nodes show "?", revealed nodes
 * show the server's value verbatim; ordinals and badges are drawn beside
 * nodes during demo playback. */
export class GraphView {
  private svg: SVGSVGElement;
  private viewBox = { x: 0, y: 0, w: 900, h: 600 };
  private positions: NodePos[];
  onNodeClick: (node: number) => void = () => {};

  constructor(private host: HTMLElement, private env: EnvView) {
    this.positions = layout(env);
    this.svg = document.createElementNS(SVG, "svg");
    this.svg.setAttribute("width", "100%");
    this.svg.setAttribute("height", "100%");
    this.applyViewBox();
    host.replaceChildren(this.svg);
    this.wirePanZoom();
  }

  private applyViewBox() {
    const { x, y, w, h } = this.viewBox;
    this.svg.setAttribute("viewBox", `${x} ${y} ${w} ${h}`);
  }

  private wirePanZoom() {
    let drag: { x: number; y: number } | null = null;
    this.svg.addEventListener("pointerdown", (e) => {
      drag = { x: e.clientX, y: e.clientY };
    });
    window.addEventListener("pointerup", () => (drag = null));
    this.svg.addEventListener("pointermove", (e) => {
      if (!drag) return;
      const scale = this.viewBox.w / this.svg.clientWidth;
      this.viewBox.x -= (e.clientX - drag.x) * scale;
      this.viewBox.y -= (e.clientY - drag.y) * scale;
      drag = { x: e.clientX, y: e.clientY };
      this.applyViewBox();
    });
    this.svg.addEventListener("wheel", (e) => {
      e.preventDefault();
      const factor = e.deltaY > 0 ? 1.1 : 0.9;
      const { x, y, w, h } = this.viewBox;
      this.viewBox = {
        x: x + (w * (1 - factor)) / 2,
        y: y + (h * (1 - factor)) / 2,
        w: w * factor,
        h: h * factor,
      };
      this.applyViewBox();
    });
  }

  render(state: RenderState) {
    this.svg.replaceChildren();
    const pos = new Map(this.positions.map((p) => [p.node, p]));
    const onRoute = new Set<string>();
    const route = [this.env.root, ...state.routeSoFar];
    for (let i = 0; i + 1 < route.length; i++) {
      onRoute.add(`${route[i]}-${route[i + 1]}`);
    }
    for (const [a, b] of this.env.edges) {
      const pa = pos.get(a)!;
      const pb = pos.get(b)!;
      const line = document.createElementNS(SVG, "line");
      line.setAttribute("x1", String(pa.x));
      line.setAttribute("y1", String(pa.y));
      line.setAttribute("x2", String(pb.x));
      line.setAttribute("y2", String(pb.y));
      line.setAttribute("class",
        onRoute.has(`${a}-${b}`) ? "edge edge-route" : "edge");
      this.svg.appendChild(line);
    }
    for (const p of this.positions) this.renderNode(p, state);
  }

  private renderNode(p: NodePos, state: RenderState) {
    const g = document.createElementNS(SVG, "g");
    g.setAttribute("transform", `translate(${p.x} ${p.y})`);
    const circle = document.createElementNS(SVG, "circle");
    circle.setAttribute("r", "16");
    const classes = ["node"];
    if (p.node === this.env.root) classes.push("node-root");
    if (this.env.goals.includes(p.node)) classes.push("node-goal");
    if (state.candidates.includes(p.node)) classes.push("node-candidate");
    if (state.highlighted === p.node) classes.push("node-highlight");
    if (state.routeSoFar.includes(p.node)) classes.push("node-route");
    circle.setAttribute("class", classes.join(" "));
    g.appendChild(circle);

    const fixed = this.env.fixed[String(p.node)];
    const value = state.revealed.get(p.node) ?? fixed;
    const label = document.createElementNS(SVG, "text");
    label.setAttribute("class", "node-label");
    label.setAttribute("text-anchor", "middle");
    label.setAttribute("dy", "5");
    label.textContent =
      p.node === this.env.root ? "S" : value === undefined ? "?" : String(value);
    g.appendChild(label);

    const ordinal = state.ordinals.get(p.node);
    if (ordinal !== undefined) {
      const t = document.createElementNS(SVG, "text");
      t.setAttribute("class", "ordinal");
      t.setAttribute("x", "20");
      t.setAttribute("y", "-12");
      t.textContent = String(ordinal);
      g.appendChild(t);
    }
    const badge = state.badges.get(p.node);
    if (badge !== undefined) {
      const t = document.createElementNS(SVG, "text");
      t.setAttribute("class", `badge badge-${badge}`);
      t.setAttribute("x", "20");
      t.setAttribute("y", "28");
      t.textContent = badge;
      g.appendChild(t);
    }
    g.addEventListener("click", () => this.onNodeClick(p.node));
    this.svg.appendChild(g);
  }
}

/** Fold a playback frame into a renderable state (ordinals accumulate,
 * the badge marks only the frame's own node). */
export function frameToState(frames: Frame[], upto: number): RenderState {
  const state = emptyState();
  if (upto < 0) return state;
  const frame = frames[upto];
  state.revealed = frame.revealed;
  state.routeSoFar = frame.path;
  for (let i = 0; i <= upto; i++) {
    const f = frames[i];
    if (f.step.kind === "click") state.ordinals.set(f.step.node, f.ordinal);
  }
  state.badges.set(frame.step.node, frame.badge);
  return state;
}

export function toast(host: HTMLElement, message: string) {
  const el = document.createElement("div");
  el.className = "toast";
  el.textContent = message;
  host.appendChild(el);
  setTimeout(() => el.remove(), 4000);
}

import type { EnvView } from "./types.js";

export interface NodePos {
  node: number;
  x: number;
  y: number;
}

/** Layered left-to-right DAG layout with every goal in the rightmost
 * column. Layer = longest path from the root, so edges always point
 * rightward; nodes in a layer spread evenly in y. */
export function layout(env: EnvView, width = 900, height = 600): NodePos[] {
  const depth = new Array<number>(env.node_count).fill(0);
  const order = topoOrder(env);
  const out = childMap(env);
  for (const a of order) {
    for (const b of out.get(a) ?? []) {
      depth[b] = Math.max(depth[b], depth[a] + 1);
    }
  }
  const maxDepth = Math.max(...depth, 1);
  for (const g of env.goals) depth[g] = maxDepth;

  const byLayer = new Map<number, number[]>();
  for (let n = 0; n < env.node_count; n++) {
    const row = byLayer.get(depth[n]) ?? [];
    row.push(n);
    byLayer.set(depth[n], row);
  }
  const pad = 50;
  const pos: NodePos[] = [];
  for (const [d, nodes] of byLayer) {
    nodes.sort((a, b) => a - b);
    const x = pad + (d / maxDepth) * (width - 2 * pad);
    nodes.forEach((n, i) => {
      const y = pad + ((i + 1) / (nodes.length + 1)) * (height - 2 * pad);
      pos.push({ node: n, x, y });
    });
  }
  return pos.sort((a, b) => a.node - b.node);
}

export function childMap(env: EnvView): Map<number, number[]> {
  const out = new Map<number, number[]>();
  for (const [a, b] of env.edges) {
    const kids = out.get(a) ?? [];
    kids.push(b);
    out.set(a, kids);
  }
  return out;
}

function topoOrder(env: EnvView): number[] {
  const indeg = new Array<number>(env.node_count).fill(0);
  const out = childMap(env);
  for (const [, b] of env.edges) indeg[b]++;
  const queue: number[] = [];
  for (let n = 0; n < env.node_count; n++) if (indeg[n] === 0) queue.push(n);
  const order: number[] = [];
  while (queue.length) {
    const a = queue.shift()!;
    order.push(a);
    for (const b of out.get(a) ?? []) {
      if (--indeg[b] === 0) queue.push(b);
    }
  }
  return order;
}

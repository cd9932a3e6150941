/** Mirrors of the tutor service's JSON payloads. The client renders these
 * verbatim and never computes or caches ground truth itself. */

export interface EnvView {
  name: string;
  node_count: number;
  root: number;
  edges: [number, number][];
  goals: number[];
  click_cost: number;
  /** Known-constant nodes (value printed from the start, not clickable). */
  fixed: Record<string, number>;
}

export interface TrialView {
  session: string;
  trial: number;
  condition: string;
  env: EnvView;
  revealed: Record<string, number>;
  clicks: number;
  score: number;
  route_submitted: boolean;
  rules: Record<string, string>;
}

export interface Feedback {
  is_optimal: boolean;
  optimal_computation: { kind: string; node: number | null };
  regret: number;
  penalty_ms: number;
}

export interface ClickResult {
  node: number;
  revealed: number;
  clicks: number;
  feedback: Feedback | null;
}

export interface RouteResult {
  path: number[];
  path_return: number;
  rr: number;
  score: number;
  trials_remaining: number;
}

export interface DemoStep {
  kind: "click" | "move";
  node: number;
  revealed: number | null;
  annotation: "goal-setting" | "path-planning" | "switch";
}

export interface DemoTrace {
  env: string;
  seed: number;
  curriculum: string;
  steps: DemoStep[];
  score: number;
  path: number[];
  clicks: number;
  switches: number;
  committed_goals: number[];
}

export interface SessionInfo {
  id: string;
  condition: string;
  env: string;
  trials: number;
}

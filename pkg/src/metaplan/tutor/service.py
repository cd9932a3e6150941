"""Session-based HTTP tutor: trials, click feedback, demonstrations.

JSON over HTTP. A session fixes its per-trial reward draws at creation
time, so reconnections never re-roll rewards. Every mutation is appended
to a per-session JSONL event log under the data directory (env var
``TUTOR_DATA_DIR`` or the ``--data-dir`` flag), and any session can be
rebuilt from its log alone. Ground truth for unrevealed stochastic nodes
never leaves the server; values of fixed (zero-variance) nodes are common
knowledge and are shipped with the trial structure.
"""

import dataclasses
import json
import os
import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException

from ..beliefs import BeliefState, inspect, inspectable, rr_score
from ..envs import enumerate_paths, resolve_env, sample_instance
from ..exact import OracleSolution, _load_cached, optimal_feedback, solve_exact
from .demos import get_demo

CONDITIONS = ("demo", "feedback", "practice")
TRIAL_SEED_BASE = 2 ** 34
DEFAULT_TRIALS = 10

MOVEMENT_RULES = {
    "movement": "fly from the root along directed edges to any goal; "
                "the route's node values are collected on arrival",
    "planning": "click any stochastic node to reveal its value for the "
                "click fee; planning ends when the route is submitted "
                "and cannot be resumed",
}


def trial_seeds(seed: int, trials: int) -> list[int]:
    """Per-trial instance seed as a pure function of (session seed, index)."""
    base = TRIAL_SEED_BASE + seed * 1_000_003
    return [base + k for k in range(trials)]


def default_data_dir() -> Path:
    return Path(os.environ.get("TUTOR_DATA_DIR", "tutor_data"))


def prepare_oracle(env, data_dir) -> OracleSolution:
    """Solve an environment exactly and cache it for feedback sessions."""
    spec = resolve_env(env) if isinstance(env, str) else env
    oracle_dir = Path(data_dir) / "oracles"
    oracle_dir.mkdir(parents=True, exist_ok=True)
    return solve_exact(spec, cache_dir=oracle_dir)


# ---------------------------------------------------------------------------
# Session state
# ---------------------------------------------------------------------------

@dataclass
class SessionState:
    id: str
    condition: str
    env: str
    seed: int
    trials: int
    trial_seeds: list[int]
    created_at: float
    trial_index: int = 0
    score: float = 0.0
    revealed: dict[int, float] = field(default_factory=dict)  # current trial


class SessionStore:
    """Per-session append-only JSONL logs plus an in-memory view."""

    def __init__(self, data_dir):
        self.dir = Path(data_dir) / "sessions"
        self.dir.mkdir(parents=True, exist_ok=True)
        self._live: dict[str, SessionState] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry = threading.Lock()

    def path(self, session_id: str) -> Path:
        return self.dir / f"{session_id}.jsonl"

    def lock(self, session_id: str) -> threading.Lock:
        with self._registry:
            return self._locks.setdefault(session_id, threading.Lock())

    def append(self, session_id: str, event: dict):
        with open(self.path(session_id), "a") as fh:
            fh.write(json.dumps(event) + "\n")

    def events(self, session_id: str) -> list[dict]:
        path = self.path(session_id)
        if not path.exists():
            raise KeyError(session_id)
        return [json.loads(line)
                for line in path.read_text().splitlines() if line]

    def create(self, condition: str, env: str, seed: int,
               trials: int) -> SessionState:
        state = SessionState(
            id=secrets.token_hex(8), condition=condition, env=env, seed=seed,
            trials=trials, trial_seeds=trial_seeds(seed, trials),
            created_at=time.time())
        self.append(state.id, dict(
            event="created", **{k: getattr(state, k) for k in
                                ("id", "condition", "env", "seed", "trials",
                                 "trial_seeds", "created_at")}))
        self._live[state.id] = state
        return state

    def get(self, session_id: str) -> SessionState:
        if session_id not in self._live:
            self._live[session_id] = replay_events(self.events(session_id))
        return self._live[session_id]


def replay_events(events: list[dict]) -> SessionState:
    """Rebuild a session from its event log (reconnect path)."""
    head = events[0]
    assert head["event"] == "created"
    state = SessionState(
        id=head["id"], condition=head["condition"], env=head["env"],
        seed=head["seed"], trials=head["trials"],
        trial_seeds=list(head["trial_seeds"]), created_at=head["created_at"])
    for ev in events[1:]:
        if ev["event"] == "click":
            state.revealed[int(ev["node"])] = float(ev["revealed"])
        elif ev["event"] == "route":
            state.score += float(ev["rr"])
            state.trial_index += 1
            state.revealed = {}
    return state


# ---------------------------------------------------------------------------
# Application
# ---------------------------------------------------------------------------

@dataclass
class ServiceConfig:
    data_dir: Path = None
    default_trials: int = DEFAULT_TRIALS

    def __post_init__(self):
        self.data_dir = Path(self.data_dir) if self.data_dir is not None \
            else default_data_dir()


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    store = SessionStore(config.data_dir)
    oracle_dir = Path(config.data_dir) / "oracles"
    specs: dict = {}
    oracles: dict = {}

    def spec_for(selector: str):
        if selector not in specs:
            try:
                specs[selector] = resolve_env(selector)
            except (ValueError, FileNotFoundError) as exc:
                raise HTTPException(400, f"unknown env selector: {exc}")
        return specs[selector]

    def oracle_for(selector: str) -> OracleSolution:
        if selector not in oracles:
            sol = _load_cached(spec_for(selector), oracle_dir)
            if sol is None:
                raise HTTPException(
                    409, f"feedback needs a cached oracle solution for "
                         f"{selector!r}; none under {oracle_dir}")
            oracles[selector] = sol
        return oracles[selector]

    def session_or_404(session_id: str) -> SessionState:
        try:
            return store.get(session_id)
        except KeyError:
            raise HTTPException(404, f"no session {session_id!r}")

    def active_trial(state: SessionState, k: int, closed_msg: str):
        if not 0 <= k < state.trials:
            raise HTTPException(404, f"trial {k} out of range "
                                f"(session has {state.trials})")
        if k < state.trial_index:
            raise HTTPException(400, closed_msg.format(k=k))
        if k > state.trial_index:
            raise HTTPException(400, f"trial {k} has not started "
                                f"(current trial is {state.trial_index})")

    def truth_for(state: SessionState, k: int):
        return sample_instance(spec_for(state.env), state.trial_seeds[k])

    app = FastAPI(title="planning tutor")

    @app.post("/sessions")
    def create_session(body: dict):
        condition = body.get("condition", "practice")
        selector = body.get("env")
        seed = int(body.get("seed", 0))
        trials = int(body.get("trials", config.default_trials))
        if condition not in CONDITIONS:
            raise HTTPException(400, f"condition must be one of "
                                f"{CONDITIONS}, got {condition!r}")
        if not selector:
            raise HTTPException(400, "body needs an env selector")
        spec_for(selector)
        if condition == "feedback":
            oracle_for(selector)  # hard precondition: cached solution
        state = store.create(condition, selector, seed, trials)
        return dict(id=state.id, condition=condition, env=selector,
                    trials=trials)

    @app.get("/sessions/{session_id}/trials/{k}")
    def get_trial(session_id: str, k: int):
        state = session_or_404(session_id)
        if not 0 <= k < state.trials:
            raise HTTPException(404, f"trial {k} out of range "
                                f"(session has {state.trials})")
        spec = spec_for(state.env)
        revealed = dict(state.revealed) if k == state.trial_index else {}
        fixed = {n: float(spec.priors[n].support[0])
                 for n in range(spec.node_count)
                 if n != spec.root and len(spec.priors[n].support) == 1}
        return dict(
            session=session_id, trial=k, condition=state.condition,
            env=dict(name=spec.name, node_count=spec.node_count,
                     root=spec.root, edges=[list(e) for e in spec.edges],
                     goals=list(spec.goals), click_cost=spec.click_cost,
                     fixed={str(n): v for n, v in fixed.items()}),
            revealed={str(n): v for n, v in revealed.items()},
            clicks=len(revealed), score=state.score,
            route_submitted=k < state.trial_index,
            rules=MOVEMENT_RULES)

    @app.post("/sessions/{session_id}/trials/{k}/clicks")
    def register_click(session_id: str, k: int, body: dict):
        state = session_or_404(session_id)
        with store.lock(session_id):
            active_trial(state, k, "cannot resume planning: trial {k}'s "
                                   "route was already submitted")
            if "node" not in body:
                raise HTTPException(400, "body needs a node")
            node = int(body["node"])
            spec = spec_for(state.env)
            if not 0 <= node < spec.node_count or node == spec.root:
                raise HTTPException(400, f"node {node} is not clickable")
            if not inspectable(spec, node):
                raise HTTPException(400, f"node {node} has a known fixed "
                                         f"value; nothing to reveal")
            if node in state.revealed:
                raise HTTPException(400, f"node {node} is already revealed")
            feedback = None
            if state.condition == "feedback":
                belief = BeliefState(tuple(sorted(state.revealed.items())),
                                     len(state.revealed))
                record = optimal_feedback(belief, inspect(node),
                                          oracle_for(state.env))
                feedback = feedback_to_jsonable(record)
            truth = truth_for(state, k)
            value = float(truth.values[node])
            state.revealed[node] = value
            store.append(session_id, dict(
                event="click", trial=k, node=node, revealed=value,
                feedback=feedback))
            return dict(node=node, revealed=value,
                        clicks=len(state.revealed), feedback=feedback)

    @app.post("/sessions/{session_id}/trials/{k}/route")
    def submit_route(session_id: str, k: int, body: dict):
        state = session_or_404(session_id)
        with store.lock(session_id):
            active_trial(state, k, "trial {k} already has a route")
            spec = spec_for(state.env)
            path = tuple(int(n) for n in body.get("path", ()))
            if path and path[0] == spec.root:
                path = path[1:]
            if path not in set(enumerate_paths(spec)):
                raise HTTPException(400, f"{list(path)} is not a "
                                         f"root-to-goal path")
            truth = truth_for(state, k)
            path_return = truth.path_return(path)
            rr = rr_score(path_return, len(state.revealed), spec.click_cost)
            state.score += rr
            state.trial_index += 1
            state.revealed = {}
            store.append(session_id, dict(
                event="route", trial=k, path=list(path),
                path_return=path_return, rr=rr, score=state.score))
            return dict(path=list(path), path_return=path_return, rr=rr,
                        score=state.score,
                        trials_remaining=state.trials - state.trial_index)

    @app.get("/demos")
    def serve_demo(env: str, policy: str = "greedy_hier", seed: int = 0,
                   step: str = "full"):
        try:
            demo = get_demo(spec_for(env), policy, seed, step)
        except ValueError as exc:
            raise HTTPException(400, str(exc))
        return demo.to_jsonable()

    app.state.store = store
    app.state.config = config
    return app


def feedback_to_jsonable(record) -> dict:
    best = record.optimal_computation
    return dict(is_optimal=record.is_optimal,
                optimal_computation=dict(
                    kind=best.kind,
                    node=None if best.node is None else int(best.node)),
                regret=record.regret, penalty_ms=record.penalty_ms)


def replay_session(data_dir, session_id: str) -> list[dict]:
    """Recompute each closed trial's rr from the raw event log.

    Returns one row per submitted route with the recomputed value and the
    value the service reported, so callers can assert they agree.
    """
    store = SessionStore(data_dir)
    events = store.events(session_id)
    head = events[0]
    spec = resolve_env(head["env"])
    seeds = head["trial_seeds"]
    clicks: dict[int, int] = {}
    out = []
    for ev in events[1:]:
        if ev["event"] == "click":
            clicks[ev["trial"]] = clicks.get(ev["trial"], 0) + 1
        elif ev["event"] == "route":
            truth = sample_instance(spec, seeds[ev["trial"]])
            rr = rr_score(truth.path_return(tuple(ev["path"])),
                          clicks.get(ev["trial"], 0), spec.click_cost)
            out.append(dict(trial=ev["trial"], rr=rr,
                            reported_rr=ev["rr"],
                            matches=abs(rr - ev["rr"]) < 1e-9))
    return out

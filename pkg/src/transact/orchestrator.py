"""Drives the conversation: alternating turns of three ego runs plus a decision.

Each turn the current speaker's Parent, Adult, and Child run their retrieval
loops over that speaker's own memory partitions, a decision round picks one
candidate, and only the chosen text enters the shared history. Agents never
see each other's life scripts, memories, or losing candidates.
"""

from __future__ import annotations

import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

from .core import (
    CriterionScores,
    DecisionRecord,
    EGO_ORDER,
    EgoResponse,
    EgoState,
    ProviderId,
    ScenarioConfig,
    TerminationReason,
    Transcript,
    Utterance,
    Violation,
    fingerprint_scenario,
    validate_scenario,
)
from .decision import decide
from .ego_agent import EgoTurnContext, run_ego_turn
from .memory import Embedder, MemoryIndex, build_index, load_index_cache, save_index_cache
from .provider import ProviderStopSignal
from .runlog import RunLog

logger = logging.getLogger(__name__)

PartitionKey = tuple[str, EgoState]

HUMAN_RATIONALE = "human input"


class InvalidScenarioError(ValueError):
    """run_simulation was handed a config that validate_scenario rejects."""

    def __init__(self, violations: list[Violation]) -> None:
        super().__init__("; ".join(str(v) for v in violations))
        self.violations = violations


class SimulationError(RuntimeError):
    """A turn failed mid-run; carries the partial transcript (no termination reason)."""

    def __init__(self, message: str, transcript: Transcript, cause: Exception) -> None:
        super().__init__(message)
        self.transcript = transcript
        self.cause = cause


@dataclass
class RunState:
    scenario: ScenarioConfig
    utterances: list[Utterance] = field(default_factory=list)
    speaker: str = ""
    turn: int = 0
    rng: random.Random = field(default_factory=random.Random)

    @classmethod
    def start(cls, scenario: ScenarioConfig) -> "RunState":
        return cls(
            scenario=scenario,
            speaker=scenario.first_speaker,
            rng=random.Random(scenario.seed),
        )


def check_termination(state: RunState) -> TerminationReason | None:
    """Stop with MaxTurns once the turn counter reaches the limit; else continue (None)."""
    if state.turn >= state.scenario.max_turns:
        return TerminationReason.MAX_TURNS
    return None


def build_indices(
    cfg: ScenarioConfig,
    embedder: Embedder,
    *,
    cache_path: str | Path | None = None,
) -> dict[PartitionKey, MemoryIndex]:
    """Build (or load from the optional cache) all six partition indices."""
    fingerprint = fingerprint_scenario(cfg)
    if cache_path is not None:
        cached = load_index_cache(
            cache_path, scenario_fingerprint=fingerprint, embedder_id=embedder.id
        )
        if cached is not None:
            return {(idx.agent, idx.ego_state): idx for idx in cached}
    indices: dict[PartitionKey, MemoryIndex] = {}
    for agent in cfg.agents:
        for persona in agent.personas:
            indices[(agent.name, persona.ego_state)] = build_index(
                persona.memories, embedder, agent=agent.name, ego_state=persona.ego_state
            )
    if cache_path is not None:
        save_index_cache(
            cache_path,
            list(indices.values()),
            scenario_fingerprint=fingerprint,
            embedder_id=embedder.id,
        )
    return indices


def step_turn(
    state: RunState,
    provider,
    embedder: Embedder,
    indices: Mapping[PartitionKey, MemoryIndex],
    *,
    run_log: RunLog | None = None,
    executor: ThreadPoolExecutor | None = None,
) -> Utterance:
    """Run one full turn for the current speaker and append it to the state.

    The three ego turns share only immutable context; with an executor they
    run concurrently and the result is identical to sequential execution.
    """
    if state.turn >= state.scenario.max_turns:
        raise ValueError(f"turn counter {state.turn} has reached max_turns")
    log = run_log or RunLog()
    cfg = state.scenario
    agent = cfg.agent(state.speaker)
    history = tuple((u.speaker, u.text) for u in state.utterances)

    def run_one(ego: EgoState):
        ctx = EgoTurnContext(
            agent=agent.name,
            turn=state.turn,
            opening_prompt=cfg.opening_prompt,
            history=history,
            descriptor=agent.persona(ego).descriptor,
            tool_budget=cfg.tool_budget,
            k=cfg.k,
        )
        return run_ego_turn(ctx, ego, indices[(agent.name, ego)], provider, embedder, log)

    if executor is not None:
        outcomes = list(executor.map(run_one, EGO_ORDER))
    else:
        outcomes = [run_one(ego) for ego in EGO_ORDER]

    candidates = tuple(o.response for o in outcomes)
    decision = decide(
        candidates,
        history,
        cfg.opening_prompt,
        agent.life_script,
        cfg.decision_weights,
        agent.name,
        state.turn,
        provider,
        log,
    )
    chosen_text = next(c.text for c in candidates if c.ego_state is decision.chosen)
    utterance = Utterance(
        turn=state.turn,
        speaker=agent.name,
        chosen_ego=decision.chosen,
        text=chosen_text,
        candidates=candidates,
        decision=decision,
        retrieval_log=tuple(ev for o in outcomes for ev in o.retrieval),
    )
    log.record(
        "utterance", turn=state.turn, speaker=agent.name, chosen=decision.chosen.value,
        malformed_steps=sum(o.malformed_steps for o in outcomes),
    )
    _advance(state, utterance)
    return utterance


def _advance(state: RunState, utterance: Utterance) -> None:
    state.utterances.append(utterance)
    state.speaker = state.scenario.other_agent(state.speaker).name
    state.turn += 1


def _human_turn(
    state: RunState, input_fn: Callable[[str], str], run_log: RunLog
) -> Utterance:
    """Read one line as the human-played agent's utterance.

    The schema stays uniform: the typed line becomes all three candidates,
    the decision is a synthetic all-zero record flagged human=true, and the
    chosen ego is Adult (consistent with the selection tie-break).
    """
    cfg = state.scenario
    while True:
        line = input_fn(f"{state.speaker}> ")  # EOFError propagates to the run loop
        text = line.strip()
        if text:
            break
    candidates = tuple(
        EgoResponse(ego_state=ego, text=text, emotion="unspecified", tone="unspecified")
        for ego in EGO_ORDER
    )
    zero = CriterionScores(0, 0, 0, 0)
    decision = DecisionRecord(
        scores={ego: zero for ego in EGO_ORDER},
        weights=cfg.decision_weights,
        chosen=EgoState.ADULT,
        rationale=HUMAN_RATIONALE,
        human=True,
    )
    utterance = Utterance(
        turn=state.turn,
        speaker=state.speaker,
        chosen_ego=EgoState.ADULT,
        text=text,
        candidates=candidates,
        decision=decision,
        retrieval_log=(),
    )
    run_log.record("utterance", turn=state.turn, speaker=state.speaker, chosen="Adult", human=True)
    _advance(state, utterance)
    return utterance


def run_simulation(
    cfg: ScenarioConfig,
    provider,
    embedder: Embedder,
    *,
    run_log: RunLog | None = None,
    human_agent: str | None = None,
    input_fn: Callable[[str], str] | None = None,
    parallel_egos: bool = False,
    index_cache_path: str | Path | None = None,
    on_utterance: Callable[[Utterance], None] | None = None,
) -> Transcript:
    """Run a whole scenario and return its transcript.

    Stops at max_turns (MaxTurns) or when the provider layer raises
    ProviderStopSignal (ProviderStop, e.g. end of interactive input). Any
    other mid-run failure raises SimulationError carrying the partial
    transcript with no termination reason.
    """
    violations = validate_scenario(cfg)
    if violations:
        raise InvalidScenarioError(violations)
    if human_agent is not None:
        cfg.agent(human_agent)  # KeyError for an unknown name
        if input_fn is None:
            raise ValueError("human_agent requires an input_fn")

    log = run_log or RunLog()
    if hasattr(provider, "attach_run_log"):
        provider.attach_run_log(log)
    fingerprint = fingerprint_scenario(cfg)
    indices = build_indices(cfg, embedder, cache_path=index_cache_path)
    provider_id = ProviderId(kind=provider.kind, model=provider.model, embedder=embedder.id)
    state = RunState.start(cfg)

    def snapshot(reason: TerminationReason | None) -> Transcript:
        return Transcript(
            scenario_fingerprint=fingerprint,
            provider=provider_id,
            seed=cfg.seed,
            utterances=tuple(state.utterances),
            termination_reason=reason,
        )

    executor: ThreadPoolExecutor | None = None
    if parallel_egos:
        executor = ThreadPoolExecutor(max_workers=len(EGO_ORDER), thread_name_prefix="ego")
    try:
        while check_termination(state) is None:
            log.record("turn_start", turn=state.turn, speaker=state.speaker)
            try:
                if human_agent is not None and state.speaker == human_agent:
                    assert input_fn is not None
                    utterance = _human_turn(state, input_fn, log)
                else:
                    utterance = step_turn(
                        state, provider, embedder, indices, run_log=log, executor=executor
                    )
                if on_utterance is not None:
                    on_utterance(utterance)
            except (ProviderStopSignal, EOFError):
                logger.info("provider layer stopped the run at turn %d", state.turn)
                return snapshot(TerminationReason.PROVIDER_STOP)
            except Exception as e:
                raise SimulationError(
                    f"turn {state.turn} ({state.speaker}) failed: {e}", snapshot(None), e
                ) from e
    finally:
        if executor is not None:
            executor.shutdown(wait=True)
    return snapshot(TerminationReason.MAX_TURNS)

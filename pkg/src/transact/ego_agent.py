"""One ego state's turn: a ReAct loop over the memory-search tool.

The loop is line-oriented and budgeted. Each completion parses into a step;
searches run against the ego's own memory partition and come back as
Observation blocks in a cumulative scratchpad. A hard budget caps searches,
one malformed step earns one retry, and every path ends in a final answer
within ``tool_budget + 2`` provider calls.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from . import templates
from .core import EgoResponse, EgoState, RetrievalEvent
from .memory import Embedder, MemoryIndex, search_top_k
from .provider import CallerInfo, ChatMessage, Role
from .runlog import RunLog

logger = logging.getLogger(__name__)

NO_MEMORIES = "no memories found"
STOP_MARKERS = ("Observation:",)
UNSPECIFIED = "unspecified"

_BUDGET_EXHAUSTED_NOTE = "Search budget exhausted. Give your Final Answer now."
_MALFORMED_NOTE = (
    "Observation: that step was malformed. Action Input must carry a non-empty "
    "query. Search again correctly, or give your Final Answer."
)
_KICKOFF = "Take your turn now, following the protocol."
_EMPTY_FALLBACK = "(no response)"


class MalformedStepError(ValueError):
    """A search action without a usable Action Input line."""


@dataclass(frozen=True)
class SearchMemories:
    query: str


@dataclass(frozen=True)
class FinalAnswer:
    text: str
    emotion: str
    tone: str


@dataclass(frozen=True)
class ReactStep:
    thought: str | None
    action: SearchMemories | FinalAnswer | None


@dataclass(frozen=True)
class EgoTurnContext:
    """Everything one ego turn may see. The life script is deliberately absent:
    it enters only at the decision step."""

    agent: str
    turn: int
    opening_prompt: str
    history: tuple[tuple[str, str], ...]  # (speaker, chosen text), oldest first
    descriptor: str
    tool_budget: int
    k: int


@dataclass(frozen=True)
class EgoTurnOutcome:
    response: EgoResponse
    retrieval: tuple[RetrievalEvent, ...]
    malformed_steps: int
    provider_calls: int


def parse_react_step(raw: str) -> ReactStep:
    """Parse one completion into a step.

    Grammar, all prefixes case-sensitive at start of line: an optional
    "Thought:" line; either "Action: search_memories" followed by
    "Action Input: <query>", or "Final Answer:" followed by "Text:",
    "Emotion:", "Tone:" lines (missing emotion or tone defaults to
    "unspecified"). Text with neither directive degrades gracefully to a
    final answer carrying the whole raw text.

    Raises MalformedStepError for a search action without a non-empty
    Action Input.
    """
    lines = raw.splitlines()
    thought: str | None = None
    for line in lines:
        if line.startswith("Thought:"):
            thought = line[len("Thought:"):].strip()
            break
    for i, line in enumerate(lines):
        if line.startswith("Final Answer:"):
            return ReactStep(thought, _parse_final_answer(lines, i))
        if line.startswith("Action:") and line[len("Action:"):].strip() == "search_memories":
            for later in lines[i + 1 :]:
                if later.startswith("Action Input:"):
                    query = later[len("Action Input:"):].strip()
                    if query:
                        return ReactStep(thought, SearchMemories(query))
                    break
            raise MalformedStepError("Action: search_memories requires a non-empty Action Input")
    return ReactStep(thought, FinalAnswer(raw, UNSPECIFIED, UNSPECIFIED))


def _parse_final_answer(lines: list[str], start: int) -> FinalAnswer:
    inline = lines[start][len("Final Answer:"):].strip()
    text_parts: list[str] | None = None
    collecting = False
    emotion = ""
    tone = ""
    for line in lines[start + 1 :]:
        if line.startswith("Text:"):
            text_parts = [line[len("Text:"):].strip()]
            collecting = True
        elif line.startswith("Emotion:"):
            emotion = line[len("Emotion:"):].strip()
            collecting = False
        elif line.startswith("Tone:"):
            tone = line[len("Tone:"):].strip()
            collecting = False
        elif collecting:
            assert text_parts is not None
            text_parts.append(line)
    if text_parts is not None:
        text = "\n".join(text_parts).strip()
    else:
        # No Text: line; fall back to the inline remainder, then the bare block.
        body = [line for line in lines[start + 1 :] if not line.startswith(("Emotion:", "Tone:"))]
        text = inline or "\n".join(body).strip()
    return FinalAnswer(text, emotion or UNSPECIFIED, tone or UNSPECIFIED)


def format_observation(hits: list) -> str:
    """Render search hits as a stable observation block.

    One numbered entry per hit with context / reaction / emotions / tone and
    the score to four decimals; no hits renders the literal "no memories
    found". Byte-stable for identical input.
    """
    if not hits:
        return NO_MEMORIES
    blocks = []
    for n, (rec, score) in enumerate(hits, start=1):
        blocks.append(
            f"{n}. context: {rec.context}\n"
            f"   reaction: {rec.reaction}\n"
            f"   emotions: {', '.join(rec.emotions)}\n"
            f"   tone: {rec.tone}\n"
            f"   score: {score:.4f}"
        )
    return "\n".join(blocks)


def render_history(history: tuple[tuple[str, str], ...]) -> str:
    if not history:
        return "(no conversation yet)"
    return "\n".join(f"{speaker}: {text}" for speaker, text in history)


def _system_prompt(ctx: EgoTurnContext) -> str:
    return templates.load("ego_turn").format(
        agent=ctx.agent,
        descriptor=ctx.descriptor,
        situation=ctx.opening_prompt,
        history=render_history(ctx.history),
        budget=ctx.tool_budget,
        k=ctx.k,
    )


def _fallback_text(step: ReactStep, raw: str) -> str:
    if step.thought:
        return step.thought
    if raw.strip():
        return raw.strip()
    return _EMPTY_FALLBACK


def run_ego_turn(
    ctx: EgoTurnContext,
    ego: EgoState,
    index: MemoryIndex,
    provider,
    embedder: Embedder,
    run_log: RunLog | None = None,
) -> EgoTurnOutcome:
    """Run the budgeted search-then-answer loop for one ego state.

    Searches hit only the given partition index. After ``tool_budget``
    searches the prompt gains an exhaustion directive and any further search
    attempt is coerced into a final answer built from the best available
    draft. One malformed step per turn earns a retry observation; a second
    forces finalization. Always returns within ``tool_budget + 2`` provider
    calls.
    """
    if index.agent != ctx.agent or index.ego_state is not ego:
        raise ValueError(
            f"index partition ({index.agent}, {index.ego_state.value}) does not match "
            f"the ego turn ({ctx.agent}, {ego.value})"
        )
    log = run_log or RunLog()
    caller = CallerInfo(agent=ctx.agent, role=ego.value, turn=ctx.turn)
    messages: list[ChatMessage] = [
        ChatMessage(Role.SYSTEM, _system_prompt(ctx)),
        ChatMessage(Role.USER, _KICKOFF),
    ]
    searches = 0
    malformed = 0
    calls = 0
    retrieval: list[RetrievalEvent] = []
    memories_used: list[str] = []

    def finish(text: str, emotion: str, tone: str) -> EgoTurnOutcome:
        response = EgoResponse(
            ego_state=ego,
            text=text.strip() or _EMPTY_FALLBACK,
            emotion=emotion or UNSPECIFIED,
            tone=tone or UNSPECIFIED,
            memories_used=tuple(memories_used),
            searches_performed=searches,
        )
        assert response.searches_performed <= ctx.tool_budget
        return EgoTurnOutcome(response, tuple(retrieval), malformed, calls)

    for _ in range(ctx.tool_budget + 2):
        raw = provider.complete(messages, stop_markers=STOP_MARKERS, caller=caller)
        calls += 1
        try:
            step = parse_react_step(raw)
        except MalformedStepError as e:
            malformed += 1
            log.record(
                "react_step", agent=ctx.agent, ego=ego.value, turn=ctx.turn,
                action="malformed", searches=searches,
            )
            if malformed >= 2:
                return finish(_fallback_text(ReactStep(None, None), raw), "", "")
            logger.warning("malformed step for %s/%s: %s", ctx.agent, ego.value, e)
            messages.append(ChatMessage(Role.ASSISTANT, raw))
            messages.append(ChatMessage(Role.USER, _MALFORMED_NOTE))
            continue

        if isinstance(step.action, FinalAnswer):
            log.record(
                "react_step", agent=ctx.agent, ego=ego.value, turn=ctx.turn,
                action="final_answer", searches=searches,
            )
            return finish(
                step.action.text or _fallback_text(step, raw),
                step.action.emotion,
                step.action.tone,
            )

        assert isinstance(step.action, SearchMemories)
        if searches >= ctx.tool_budget:
            # Budget spent and the directive was ignored: coerce to an answer.
            log.record(
                "react_step", agent=ctx.agent, ego=ego.value, turn=ctx.turn,
                action="coerced_final", searches=searches,
            )
            return finish(_fallback_text(step, raw), "", "")

        hits = search_top_k(index, step.action.query, ctx.k, embedder)
        searches += 1
        retrieval.append(
            RetrievalEvent(
                ego_state=ego,
                query=step.action.query,
                hit_ids=tuple(rec.id for rec, _ in hits),
                scores=tuple(score for _, score in hits),
            )
        )
        for rec, _ in hits:
            if rec.id not in memories_used:
                memories_used.append(rec.id)
        log.record(
            "react_step", agent=ctx.agent, ego=ego.value, turn=ctx.turn,
            action="search", query=step.action.query, hits=len(hits), searches=searches,
        )
        messages.append(ChatMessage(Role.ASSISTANT, raw))
        messages.append(ChatMessage(Role.USER, f"Observation:\n{format_observation(hits)}"))
        if searches == ctx.tool_budget:
            messages.append(ChatMessage(Role.USER, _BUDGET_EXHAUSTED_NOTE))

    raise AssertionError("ego turn failed to finalize within tool_budget + 2 calls")

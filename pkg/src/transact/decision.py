"""Pick one of the three ego candidates: model-scored, engine-selected.

The model judges each candidate on four criteria; the weighted argmax and
its tie-break live in the engine, so every choice in a transcript can be
recomputed and audited after the fact.
"""

from __future__ import annotations

import logging
import re
from typing import Mapping, Sequence

from . import templates
from .core import (
    CriterionScores,
    DecisionRecord,
    DecisionWeights,
    EGO_ORDER,
    EgoResponse,
    EgoState,
    select_ego,
)
from .ego_agent import render_history
from .provider import CallerInfo, ChatMessage, Role
from .runlog import RunLog

logger = logging.getLogger(__name__)

FALLBACK_RATIONALE = "decision fallback"

_SCORES_RE = re.compile(
    r"^SCORES (Parent|Adult|Child):\s*"
    r"relevance=(-?\d+)\s+progress=(-?\d+)\s+social=(-?\d+)\s+script=(-?\d+)\s*$"
)
_RETRY_NOTE = (
    "Your reply was missing required lines. Send exactly three SCORES lines, "
    "one per ego state, and one RATIONALE line, in the required format."
)
_KICKOFF = "Score the candidates now, in the required format."


class MalformedDecisionError(ValueError):
    """The scoring reply is missing a SCORES line for some ego state."""


# Reuse core's selection rule so decisions and transcript audits can never drift.
select = select_ego


def render_decision_prompt(
    candidates: Sequence[EgoResponse],
    history: tuple[tuple[str, str], ...],
    opening_prompt: str,
    life_script: str,
    agent: str,
) -> list[ChatMessage]:
    """Build the scoring prompt: situation, history, verbatim life script, and
    the three candidates in fixed Parent, Adult, Child order."""
    by_ego = {c.ego_state: c for c in candidates}
    if set(by_ego) != set(EGO_ORDER) or len(candidates) != 3:
        raise ValueError("candidates must cover all three ego states exactly once")
    blocks = [
        f"{ego.value} ({by_ego[ego].emotion}, {by_ego[ego].tone}): {by_ego[ego].text}"
        for ego in EGO_ORDER
    ]
    system = templates.load("decision").format(
        agent=agent,
        situation=opening_prompt,
        history=render_history(history),
        life_script=life_script,
        candidates="\n".join(blocks),
    )
    return [ChatMessage(Role.SYSTEM, system), ChatMessage(Role.USER, _KICKOFF)]


def parse_scores(raw: str) -> tuple[dict[EgoState, CriterionScores], str]:
    """Extract the three SCORES lines and the RATIONALE from a scoring reply.

    Out-of-range integers clamp to [0, 10] with a logged warning. A missing
    SCORES line for any ego state raises MalformedDecisionError; a missing
    RATIONALE degrades to an empty string.
    """
    scores: dict[EgoState, CriterionScores] = {}
    rationale = ""
    for line in raw.splitlines():
        m = _SCORES_RE.match(line)
        if m:
            ego = EgoState(m.group(1))
            if ego not in scores:
                scores[ego] = CriterionScores(
                    relevance=_clamp(int(m.group(2)), ego, "relevance"),
                    progress=_clamp(int(m.group(3)), ego, "progress"),
                    social_appropriateness=_clamp(int(m.group(4)), ego, "social"),
                    script_alignment=_clamp(int(m.group(5)), ego, "script"),
                )
            continue
        if line.startswith("RATIONALE:") and not rationale:
            rationale = line[len("RATIONALE:"):].strip()
    missing = [ego.value for ego in EGO_ORDER if ego not in scores]
    if missing:
        raise MalformedDecisionError(f"missing SCORES line for {', '.join(missing)}")
    return scores, rationale


def _clamp(value: int, ego: EgoState, criterion: str) -> int:
    if 0 <= value <= 10:
        return value
    clamped = min(10, max(0, value))
    logger.warning(
        "decision score out of range: %s %s=%d clamped to %d", ego.value, criterion, value, clamped
    )
    return clamped


def _fallback_scores() -> dict[EgoState, CriterionScores]:
    zero = CriterionScores(0, 0, 0, 0)
    return {ego: zero for ego in EGO_ORDER}


def decide(
    candidates: Sequence[EgoResponse],
    history: tuple[tuple[str, str], ...],
    opening_prompt: str,
    life_script: str,
    weights: DecisionWeights,
    agent: str,
    turn: int,
    provider,
    run_log: RunLog | None = None,
) -> DecisionRecord:
    """One full decision round: prompt, score, select.

    A malformed scoring reply earns one retry with an error note; a second
    failure falls back to the Adult state (all-zero scores keep the record
    consistent with the selection rule) with a logged "decision fallback"
    rationale.
    """
    log = run_log or RunLog()
    caller = CallerInfo(agent=agent, role="decision", turn=turn)
    messages = render_decision_prompt(candidates, history, opening_prompt, life_script, agent)
    scores: Mapping[EgoState, CriterionScores] | None = None
    rationale = ""
    for attempt in range(2):
        raw = provider.complete(messages, caller=caller)
        try:
            scores, rationale = parse_scores(raw)
            break
        except MalformedDecisionError as e:
            log.record("decision_malformed", agent=agent, turn=turn, attempt=attempt, error=str(e))
            logger.warning("malformed decision reply for %s turn %d: %s", agent, turn, e)
            messages = messages + [
                ChatMessage(Role.ASSISTANT, raw),
                ChatMessage(Role.USER, _RETRY_NOTE),
            ]
    if scores is None:
        scores = _fallback_scores()
        rationale = FALLBACK_RATIONALE
        logger.warning("decision fallback to Adult for %s turn %d", agent, turn)
    chosen = select(scores, weights)
    log.record("decision", agent=agent, turn=turn, chosen=chosen.value)
    return DecisionRecord(
        scores=scores, weights=weights, chosen=chosen, rationale=rationale, human=False
    )

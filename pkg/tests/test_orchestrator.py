"""Turn loop, termination, determinism, and information hiding."""

from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor

import pytest

from helpers import final_step, make_scenario, scores_reply, search_step, simple_run_fixtures
from transact.core import EgoState, TerminationReason, transcript_hash, validate_scenario
from transact.memory import MemoryIndexError
from transact.orchestrator import (
    InvalidScenarioError,
    RunState,
    SimulationError,
    build_indices,
    check_termination,
    run_simulation,
    step_turn,
)
from transact.provider import HashEmbedder, ProviderStopSignal, ScriptedProvider
from transact.runlog import RunLog


class TestCheckTermination:
    def test_below_limit_continues(self):
        state = RunState.start(make_scenario(max_turns=10))
        state.turn = 9
        assert check_termination(state) is None

    def test_at_limit_stops(self):
        state = RunState.start(make_scenario(max_turns=10))
        state.turn = 10
        assert check_termination(state) is TerminationReason.MAX_TURNS

    def test_single_turn_run_stops_after_one_step(self):
        cfg = make_scenario(max_turns=1)
        state = RunState.start(cfg)
        assert check_termination(state) is None
        provider = ScriptedProvider(simple_run_fixtures(cfg))
        embedder = HashEmbedder()
        step_turn(state, provider, embedder, build_indices(cfg, embedder))
        assert check_termination(state) is TerminationReason.MAX_TURNS


class TestStepTurn:
    def test_turn_zero_uses_first_speaker_and_flips(self):
        cfg = make_scenario(max_turns=2, first_speaker="Alex")
        state = RunState.start(cfg)
        embedder = HashEmbedder()
        provider = ScriptedProvider(simple_run_fixtures(cfg))
        utterance = step_turn(state, provider, embedder, build_indices(cfg, embedder))
        assert utterance.turn == 0
        assert utterance.speaker == "Alex"
        assert state.speaker == "Jordan"
        assert state.turn == 1

    def test_rejected_when_turn_counter_at_limit(self):
        cfg = make_scenario(max_turns=1)
        state = RunState.start(cfg)
        state.turn = 1
        with pytest.raises(ValueError, match="max_turns"):
            step_turn(state, ScriptedProvider([]), HashEmbedder(), {})

    def test_candidates_cover_all_egos_and_retrieval_is_logged(self):
        cfg = make_scenario(max_turns=1)
        state = RunState.start(cfg)
        embedder = HashEmbedder()
        provider = ScriptedProvider(simple_run_fixtures(cfg))
        u = step_turn(state, provider, embedder, build_indices(cfg, embedder))
        assert sorted(c.ego_state.value for c in u.candidates) == ["Adult", "Child", "Parent"]
        assert len(u.retrieval_log) == 3  # one search per ego in the simple fixtures
        assert u.decision.chosen is u.chosen_ego


class TestRunSimulation:
    def test_invalid_config_is_rejected_up_front(self):
        cfg = dataclasses.replace(make_scenario(), opening_prompt=" ")
        with pytest.raises(InvalidScenarioError):
            run_simulation(cfg, ScriptedProvider([]), HashEmbedder())

    def test_minimal_run(self):
        cfg = make_scenario(max_turns=1, first_speaker="Jordan")
        t = run_simulation(cfg, ScriptedProvider(simple_run_fixtures(cfg)), HashEmbedder())
        assert len(t.utterances) == 1
        assert t.utterances[0].speaker == "Jordan"
        assert t.termination_reason is TerminationReason.MAX_TURNS

    def test_speakers_alternate_for_the_whole_run(self):
        cfg = make_scenario(max_turns=4)
        t = run_simulation(cfg, ScriptedProvider(simple_run_fixtures(cfg)), HashEmbedder())
        speakers = [u.speaker for u in t.utterances]
        assert speakers == ["Alex", "Jordan", "Alex", "Jordan"]

    def test_identical_runs_have_identical_canonical_bytes(self):
        cfg = make_scenario(max_turns=3)
        hashes = {
            transcript_hash(
                run_simulation(cfg, ScriptedProvider(simple_run_fixtures(cfg)), HashEmbedder())
            )
            for _ in range(3)
        }
        assert len(hashes) == 1

    def test_parallel_ego_execution_matches_sequential(self):
        cfg = make_scenario(max_turns=3)
        sequential = run_simulation(
            cfg, ScriptedProvider(simple_run_fixtures(cfg)), HashEmbedder()
        )
        parallel = run_simulation(
            cfg, ScriptedProvider(simple_run_fixtures(cfg)), HashEmbedder(), parallel_egos=True
        )
        assert transcript_hash(parallel) == transcript_hash(sequential)

    def test_provider_call_budget_per_turn(self):
        cfg = make_scenario(max_turns=2, tool_budget=2)
        provider = ScriptedProvider(simple_run_fixtures(cfg, searches_per_ego=2))
        run_simulation(cfg, provider, HashEmbedder())
        per_turn: dict[int, int] = {}
        for call in provider.call_log:
            per_turn[call.caller.turn] = per_turn.get(call.caller.turn, 0) + 1
        limit = 3 * (cfg.tool_budget + 2) + 2
        assert per_turn and all(count <= limit for count in per_turn.values())

    def test_history_contains_only_chosen_texts(self):
        cfg = make_scenario(max_turns=2, first_speaker="Alex")
        fixtures = []
        rival = "RIVAL-CANDIDATE-TEXT-NEVER-CHOSEN"
        for ego in ("Parent", "Adult", "Child"):
            text = "the chosen adult line" if ego == "Adult" else f"{rival} {ego}"
            fixtures.append((f"Alex/{ego}", final_step(text)))
        fixtures.append(("Alex/decision", scores_reply(EgoState.ADULT)))
        for ego in ("Parent", "Adult", "Child"):
            fixtures.append((f"Jordan/{ego}", final_step(f"jordan {ego} line")))
        fixtures.append(("Jordan/decision", scores_reply(EgoState.CHILD)))
        provider = ScriptedProvider(fixtures)
        run_simulation(cfg, provider, HashEmbedder())
        jordan_prompts = [
            m.content
            for call in provider.call_log
            if call.caller.agent == "Jordan"
            for m in call.messages
        ]
        assert jordan_prompts
        assert all(rival not in p for p in jordan_prompts)
        assert any("the chosen adult line" in p for p in jordan_prompts)

    def test_mid_run_failure_carries_partial_transcript(self):
        cfg = make_scenario(max_turns=3)
        # Fixtures for the first turn only; turn 1 underruns.
        fixtures = simple_run_fixtures(dataclasses.replace(cfg, max_turns=1))
        with pytest.raises(SimulationError) as exc_info:
            run_simulation(cfg, ScriptedProvider(fixtures), HashEmbedder())
        partial = exc_info.value.transcript
        assert len(partial.utterances) == 1
        assert partial.termination_reason is None

    def test_index_build_failure_aborts_before_turn_zero(self):
        cfg = make_scenario()
        agent = cfg.agents[0]
        persona = agent.personas[0]
        bad = dataclasses.replace(persona.memories[0], context="!!! ???")
        cfg = dataclasses.replace(
            cfg,
            agents=(
                dataclasses.replace(
                    agent,
                    personas=(dataclasses.replace(persona, memories=(bad,) + persona.memories[1:]),)
                    + agent.personas[1:],
                ),
            )
            + cfg.agents[1:],
        )
        provider = ScriptedProvider([])
        with pytest.raises(MemoryIndexError):
            run_simulation(cfg, provider, HashEmbedder())
        assert provider.call_log == []

    def test_provider_stop_signal_ends_run_cleanly(self):
        cfg = make_scenario(max_turns=5)

        class StopAfterOneTurn(ScriptedProvider):
            def complete(self, messages, stop_markers=(), caller=None):
                if caller.turn >= 1:
                    raise ProviderStopSignal("enough")
                return super().complete(messages, stop_markers, caller)

        provider = StopAfterOneTurn(simple_run_fixtures(dataclasses.replace(cfg, max_turns=1)))
        t = run_simulation(cfg, provider, HashEmbedder())
        assert len(t.utterances) == 1
        assert t.termination_reason is TerminationReason.PROVIDER_STOP

    def test_index_cache_round_trip_keeps_run_identical(self, tmp_path):
        cfg = make_scenario(max_turns=2)
        cache = tmp_path / "indices.json"
        first = run_simulation(
            cfg, ScriptedProvider(simple_run_fixtures(cfg)), HashEmbedder(),
            index_cache_path=cache,
        )
        assert cache.exists()
        second = run_simulation(
            cfg, ScriptedProvider(simple_run_fixtures(cfg)), HashEmbedder(),
            index_cache_path=cache,
        )
        assert transcript_hash(first) == transcript_hash(second)

    def test_run_log_has_a_record_per_provider_call_and_react_step(self):
        cfg = make_scenario(max_turns=1)
        provider = ScriptedProvider(simple_run_fixtures(cfg))
        log = RunLog()
        run_simulation(cfg, provider, HashEmbedder(), run_log=log)
        react_steps = log.count("react_step")
        # Each ego: one search step + one final-answer step.
        assert react_steps == 6
        assert log.count("decision") == 1
        assert log.count("utterance") == 1
        # One structured line per provider call, matching the provider's own log.
        assert log.count("provider_call") == len(provider.call_log) == 7
        sample = next(e for e in log.events if e["kind"] == "provider_call")
        assert {"backend", "agent", "role", "turn", "request_bytes", "response_bytes"} <= set(sample)


class TestHumanAgent:
    def test_human_plays_one_side(self):
        cfg = make_scenario(max_turns=2, first_speaker="Jordan")
        lines = iter(["We can fix the totals together."])

        def read(prompt: str) -> str:
            try:
                return next(lines)
            except StopIteration:
                raise EOFError

        provider = ScriptedProvider(
            simple_run_fixtures(dataclasses.replace(cfg, max_turns=2, first_speaker="Alex"))
        )
        t = run_simulation(
            cfg, provider, HashEmbedder(), human_agent="Jordan", input_fn=read
        )
        assert len(t.utterances) == 2
        human, engine = t.utterances[0], t.utterances[1]
        assert human.speaker == "Jordan"
        assert human.chosen_ego is EgoState.ADULT
        assert human.decision.human is True
        assert human.text == "We can fix the totals together."
        assert all(c.text == human.text for c in human.candidates)
        assert engine.speaker == "Alex"
        assert engine.decision.human is False

    def test_eof_at_turn_zero_gives_empty_provider_stop_transcript(self):
        cfg = make_scenario(max_turns=3, first_speaker="Jordan")

        def read(prompt: str) -> str:
            raise EOFError

        t = run_simulation(
            cfg, ScriptedProvider([]), HashEmbedder(), human_agent="Jordan", input_fn=read
        )
        assert t.utterances == ()
        assert t.termination_reason is TerminationReason.PROVIDER_STOP

    def test_blank_lines_are_reprompted(self):
        cfg = make_scenario(max_turns=1, first_speaker="Jordan")
        lines = iter(["", "   ", "a real line"])

        def read(prompt: str) -> str:
            return next(lines)

        t = run_simulation(
            cfg, ScriptedProvider([]), HashEmbedder(), human_agent="Jordan", input_fn=read
        )
        assert t.utterances[0].text == "a real line"

    def test_unknown_human_agent_rejected(self):
        cfg = make_scenario()
        with pytest.raises(KeyError):
            run_simulation(
                cfg, ScriptedProvider([]), HashEmbedder(),
                human_agent="Nobody", input_fn=lambda p: "x",
            )


def test_validated_scenarios_run_without_engine_panics():
    """Soundness fuzz: any config validate_scenario accepts must execute."""
    import random as _random

    from helpers import random_scenario

    rng = _random.Random(1234)
    for _ in range(25):
        cfg = random_scenario(rng)
        assert validate_scenario(cfg) == []
        provider = ScriptedProvider(simple_run_fixtures(cfg, rng))
        t = run_simulation(cfg, provider, HashEmbedder())
        assert len(t.utterances) == cfg.max_turns

"""
Tests for the discrete-event engine and random streams
"""
import pytest

from src.sim_core.engine import MS, NS, S, US, SimEngine
from src.sim_core.rng import RngStream
from src.utils.error_handler import ModelError, SchedulingError


class TestScheduling:
    def test_time_constants(self):
        assert (NS, US, MS, S) == (1, 1_000, 1_000_000, 1_000_000_000)

    def test_events_fire_in_time_then_insertion_order(self, engine):
        fired = []
        engine.schedule(20, "b", fired.append, "b20")
        engine.schedule(10, "a", fired.append, "a10")
        engine.schedule(20, "c", fired.append, "c20")
        engine.schedule(10, "d", fired.append, "d10")

        summary = engine.run_until(100)

        assert fired == ["a10", "d10", "b20", "c20"]
        assert summary.events_processed == 4
        assert summary.final_time == 100
        assert engine.now() == 100

    def test_now_is_fire_time_during_dispatch(self, engine):
        seen = []
        engine.schedule(1234, "x", lambda: seen.append(engine.now()))
        engine.run_until(2000)
        assert seen == [1234]

    def test_schedule_in_is_relative(self, engine):
        seen = []

        def first():
            engine.schedule_in(5 * US, "x", lambda: seen.append(engine.now()))

        engine.schedule(1 * US, "x", first)
        engine.run_until(1 * MS)
        assert seen == [6 * US]

    def test_zero_delay_events_run_after_current(self, engine):
        order = []

        def first():
            order.append("first")
            engine.schedule_in(0, "x", order.append, "nested")

        engine.schedule(10, "x", first)
        engine.schedule(10, "x", order.append, "second")
        engine.run_until(10)
        assert order == ["first", "second", "nested"]

    def test_horizon_is_inclusive(self, engine):
        fired = []
        engine.schedule(100, "x", fired.append, 100)
        engine.schedule(101, "x", fired.append, 101)
        engine.run_until(100)
        assert fired == [100]
        assert engine.events_pending == 1
        engine.run_until(200)
        assert fired == [100, 101]

    def test_schedule_in_past_raises(self, engine):
        engine.run_until(50)
        with pytest.raises(SchedulingError) as exc:
            engine.schedule(10, "x", lambda: None)
        assert exc.value.details == {"fire_at": 10, "now": 50}

    def test_horizon_before_now_raises(self, engine):
        engine.run_until(50)
        with pytest.raises(SchedulingError):
            engine.run_until(10)

    def test_cancel(self, engine):
        fired = []
        event_id = engine.schedule(10, "x", fired.append, 1)
        assert engine.cancel(event_id) is True
        assert engine.cancel(event_id) is False
        summary = engine.run_until(100)
        assert fired == []
        assert summary.events_processed == 0
        assert engine.counters.cancelled == 1
        assert engine.counters.pending == 0


class TestModelFaults:
    def test_handler_exception_names_actor(self, engine):
        def broken():
            raise ValueError("bad state")

        engine.schedule(7, "sw.p3", broken)
        with pytest.raises(ModelError) as exc:
            engine.run_until(10)
        assert exc.value.actor == "sw.p3"
        assert exc.value.details["sim_time_ns"] == 7
        assert isinstance(exc.value.original_error, ValueError)

    def test_model_error_gets_target_when_unnamed(self, engine):
        def broken():
            raise ModelError("ledger fault")

        engine.schedule(1, "dfm", broken)
        with pytest.raises(ModelError) as exc:
            engine.run_until(10)
        assert exc.value.actor == "dfm"


class TestRandomStreams:
    def test_same_seed_same_draws(self):
        a = RngStream(5, 1)
        b = RngStream(5, 1)
        assert [a.uniform() for _ in range(5)] == [b.uniform() for _ in range(5)]

    def test_streams_are_independent(self):
        a = RngStream(5, 1)
        b = RngStream(5, 2)
        assert [a.uniform() for _ in range(5)] != [b.uniform() for _ in range(5)]

    def test_named_stream_does_not_depend_on_creation_order(self):
        first = SimEngine(seed=3)
        first.rng("other")
        x = first.rng("src.tx").uniform()
        second = SimEngine(seed=3)
        y = second.rng("src.tx").uniform()
        assert x == y

    def test_engine_returns_same_stream_for_name(self, engine):
        assert engine.rng("a") is engine.rng("a")

    def test_exponential_mean(self):
        rng = RngStream(1, 9)
        draws = [rng.exponential(100.0) for _ in range(20_000)]
        assert sum(draws) / len(draws) == pytest.approx(100.0, rel=0.05)
        assert rng.exponential(0) == 0.0

    def test_integers_range(self):
        rng = RngStream(1, 9)
        values = {rng.integers(4) for _ in range(200)}
        assert values == {0, 1, 2, 3}

    def test_choice_index_follows_weights(self):
        rng = RngStream(2, 2)
        picks = [rng.choice_index([0.0, 1.0, 3.0]) for _ in range(4000)]
        assert picks.count(0) == 0
        assert picks.count(2) / len(picks) == pytest.approx(0.75, abs=0.04)

    def test_bytes_length(self):
        assert len(RngStream(1, 1).bytes(6)) == 6

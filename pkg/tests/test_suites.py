"""Tests for the suite registry and its ordered parallel execution."""
import pytest

from loopforge.config import settings
from loopforge.errors import ConfigError, NumericsError
from loopforge.services.algebra import AlgebraTag
from loopforge.services import suites
from loopforge.services.numerics import ScalarMode
from loopforge.services.parallel import ordered_map, worker_count
from loopforge.services.suites import SUITES, SuiteContext, resolve, run_suite, run_suites


@pytest.fixture
def four_threads(monkeypatch):
    monkeypatch.setattr(settings, "LOOPFORGE_THREADS", 4)


class TestRegistry:

    def test_default_selects_every_suite(self):
        assert resolve(None) == list(SUITES)
        assert resolve([]) == list(SUITES)

    def test_selection_keeps_registry_order(self):
        assert resolve(["tangent", "loop"]) == ["loop", "tangent"]

    def test_unknown_suite(self):
        with pytest.raises(ConfigError, match="nonsense"):
            resolve(["loop", "nonsense"])


class TestParallel:
    """Worker count never changes results or their order."""

    def test_worker_count_is_capped(self, four_threads):
        assert worker_count() == 4
        assert worker_count(16) == 4
        assert worker_count(0) == 1

    def test_threads_setting_is_clamped(self, monkeypatch):
        monkeypatch.setattr(settings, "LOOPFORGE_THREADS", -3)
        assert settings.threads == 1

    def test_ordered_map_keeps_order(self, four_threads):
        assert ordered_map(lambda x: x * x, range(20)) == [x * x for x in range(20)]

    def test_suites_identical_across_worker_counts(self, four_threads):
        ctx = SuiteContext(tag=AlgebraTag.H, mode=ScalarMode.EXACT, samples=8)
        serial = run_suites(["loop", "pseudoauto"], ctx, seed=5, workers=1)
        threaded = run_suites(["loop", "pseudoauto"], ctx, seed=5, workers=4)
        assert [e.model_dump() for e in serial] == [e.model_dump() for e in threaded]
        assert [e.suite for e in serial][0] == "loop"


class TestRunSuite:

    def test_seed_changes_samples_not_verdicts(self):
        ctx = SuiteContext(tag=AlgebraTag.O, samples=10)
        first = run_suite("loop", ctx, seed=1)
        second = run_suite("loop", ctx, seed=2)
        assert [e.identity for e in first] == [e.identity for e in second]
        assert all(e.passed for e in first + second)

    def test_corrupted_algebra_fails(self, broken_octonions):
        ctx = SuiteContext(tag=AlgebraTag.O, samples=20, algebra=broken_octonions)
        entries = run_suite("loop", ctx, seed=0)
        assert not all(e.passed for e in entries)

    def test_aborted_suite_becomes_failing_entry(self, monkeypatch):
        def explode(ctx, rng):
            raise NumericsError("diverged")

        monkeypatch.setitem(suites.SUITES, "phi", explode)
        entries = run_suite("phi", SuiteContext(tag=AlgebraTag.O), seed=0)
        assert len(entries) == 1
        assert entries[0].identity == "phi-suite"
        assert not entries[0].passed
        assert "diverged" in entries[0].detail

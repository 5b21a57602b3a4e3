"""Tests for exhaustive scheme verification."""

from typing import Any

import pytest

from app.services.coding.schedule import (
    PriorityPlan,
    SchemeKind,
    dual_protection,
    priority_schedule,
    single_protection,
)
from app.services.scenario.models import Scenario
from app.services.scenario.verification import (
    CheckResult,
    sweep_case,
    verify_scenario,
)


def scenario(scheme: SchemeKind, k: int, m: int, **extra: Any) -> Scenario:
    return Scenario(scheme=scheme, k=k, m=m, seed=1, **extra)


class TestCheckResult:
    """Test check rendering."""

    def test_value_check(self) -> None:
        """Test single-value checks render the value."""
        check = CheckResult(name="capacity", passed=1, total=1, value=4)
        assert check.render() == "capacity 4 PASS"

    def test_failed_sweep(self) -> None:
        """Test partial sweeps render as FAIL."""
        check = CheckResult(name="two-failure sweep", passed=9, total=10)
        assert not check.ok
        assert check.render() == "two-failure sweep 9/10 FAIL"


class TestSweepCase:
    """Test one replayed failure pattern."""

    def test_within_budget(self) -> None:
        """Test one silent path is survived by single protection."""
        assert sweep_case(single_protection(4, 4), 1, (2,), 8, 0)

    def test_beyond_budget(self) -> None:
        """Test two silent paths defeat single protection."""
        assert not sweep_case(single_protection(4, 4), 1, (0, 2), 8, 0)

    def test_dual_two_failures(self) -> None:
        """Test a working and a protection failure under dual protection."""
        assert sweep_case(dual_protection(5, 3), 0, (1, 4), 8, 0)


class TestVerifyScenario:
    """Test whole-scenario verification."""

    async def test_single_k5(self) -> None:
        """Test single k=5 passes with capacity 4 and a 25-case sweep."""
        report = await verify_scenario(scenario(SchemeKind.SINGLE, 5, 5))
        assert report.passed
        rendered = [check.render() for check in report.checks]
        assert "capacity 4 PASS" in rendered
        assert "column budget 5/5 PASS" in rendered
        assert "single-failure sweep 25/25 PASS" in rendered
        assert report.seed == 1

    @pytest.mark.parametrize("k", range(2, 11))
    async def test_single_all_sizes(self, k: int) -> None:
        """Test single protection survives any one failure for k in 2..10."""
        report = await verify_scenario(scenario(SchemeKind.SINGLE, k, k))
        assert report.passed, report.summary()

    @pytest.mark.parametrize("n", range(3, 13))
    async def test_dual_all_sizes(self, n: int) -> None:
        """Test dual protection survives any two failures for n in 3..12."""
        report = await verify_scenario(
            scenario(SchemeKind.DUAL, n, 3), max_concurrency=4
        )
        assert report.passed, report.summary()
        names = [check.name for check in report.checks]
        assert names == [
            "capacity",
            "column budget",
            "single-failure sweep",
            "two-failure sweep",
            "coefficient minors",
        ]
        two = report.checks[3]
        assert two.total == n * (n - 1) // 2 * 3

    async def test_rotated_dual(self) -> None:
        """Test rotation keeps every cycle verifiable from cycle 0."""
        report = await verify_scenario(
            scenario(SchemeKind.DUAL, 6, 4, rotate_protection=True)
        )
        assert report.passed

    @pytest.mark.parametrize(("k", "t"), [(4, 1), (5, 2), (7, 3)])
    async def test_priority_uniform(self, k: int, t: int) -> None:
        """Test uniform priority plans survive every failure set up to t."""
        chosen = scenario(SchemeKind.PRIORITY, k, k, t=t, p=(t,) * k)
        report = await verify_scenario(chosen)
        assert report.passed, report.summary()
        sweep = report.checks[-1]
        assert sweep.name == "t-failure sweep"

    async def test_priority_sweep_size(self) -> None:
        """Test (k, t) = (5, 2) replays every 1- and 2-failure set per round."""
        chosen = scenario(SchemeKind.PRIORITY, 5, 5, t=2, p=(2,) * 5)
        report = await verify_scenario(chosen)
        assert report.checks[-1].total == (5 + 10) * 5

    async def test_seed_override(self) -> None:
        """Test an explicit seed wins over the scenario seed."""
        report = await verify_scenario(scenario(SchemeKind.SINGLE, 3, 3), seed=99)
        assert report.seed == 99


class TestPrioritySchedules:
    """Test priority schedules through the sweep helper."""

    def test_uneven_plan(self) -> None:
        """Test an uneven budget still survives one failure everywhere."""
        plan = PriorityPlan(d=(2, 2, 4, 4), p=(2, 2, 0, 0), m=4)
        schedule = priority_schedule(plan, 1)
        for round_ in range(4):
            for path in range(4):
                assert sweep_case(schedule, round_, (path,), 4, 3)

"""
Exhaustive self-checks of a scenario's protection scheme.

Every failure pattern the scheme promises to survive is replayed through
the real encode, wire and recovery path with random payloads. Cases are
independent and fan out over worker threads.
"""

import asyncio
from collections.abc import Callable, Iterable
from itertools import combinations
from typing import Any

import numpy as np
from pydantic import BaseModel, Field

from app.core.config import settings
from app.core.log import logger
from app.services.coding.codec import (
    close_round,
    encode_round,
    ingest,
    new_round_buffer,
    received_plain,
    recover_round,
)
from app.services.coding.framing import decode_wire, encode_wire
from app.services.coding.schedule import Schedule, SchemeKind

from .models import Scenario


class CheckResult(BaseModel):
    """Outcome of one named check."""

    name: str
    passed: int
    total: int
    value: int | None = Field(
        default=None, description="Measured quantity for single-value checks"
    )
    failures: list[str] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.passed == self.total

    def render(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        if self.value is not None:
            return f"{self.name} {self.value} {status}"
        return f"{self.name} {self.passed}/{self.total} {status}"


class VerificationReport(BaseModel):
    scenario: str
    scheme: SchemeKind
    seed: int
    checks: list[CheckResult]

    @property
    def passed(self) -> bool:
        return all(check.ok for check in self.checks)

    def summary(self) -> str:
        return "; ".join(check.render() for check in self.checks)


def sweep_case(
    schedule: Schedule,
    round_: int,
    failed: tuple[int, ...],
    payload_size: int,
    seed: int,
) -> bool:
    """Send one round with `failed` paths silent; True iff every payload survives."""
    rng = np.random.default_rng([seed, round_, *failed])
    ordinals = schedule.ordinals(round_)
    payloads = {ordinal: rng.bytes(payload_size) for ordinal in ordinals}
    packets = encode_round(schedule, round_, payloads, session=schedule.session)
    buffer = new_round_buffer(schedule, round_, session=schedule.session)
    for packet in packets:
        if packet.path_index not in failed:
            ingest(buffer, packet.path_index, decode_wire(encode_wire(packet)))
    report = recover_round(schedule, close_round(buffer))
    if report.unrecoverable:
        return False
    delivered = received_plain(schedule, buffer) | report.recovered
    return all(delivered.get(ordinal) == payloads[ordinal] for ordinal in ordinals)


def _capacity_check(schedule: Schedule) -> CheckResult:
    expected = schedule.k - schedule.t
    ok = schedule.capacity == expected and schedule.payloads_per_cycle == (
        expected * schedule.m
    )
    return CheckResult(
        name="capacity", passed=int(ok), total=1, value=schedule.capacity
    )


def _column_budget_check(schedule: Schedule) -> CheckResult:
    failures = [
        f"round {round_}"
        for round_ in range(schedule.m)
        if len(schedule.encoded_paths(round_)) != schedule.t
    ]
    return CheckResult(
        name="column budget",
        passed=schedule.m - len(failures),
        total=schedule.m,
        failures=failures,
    )


def _minor_check(schedule: Schedule) -> CheckResult:
    """Every 2×2 minor of the two protection rows over working-path pairs."""
    field = schedule.field
    failures: list[str] = []
    total = 0
    for round_ in range(schedule.m):
        first, second = (
            schedule.coefficients[(path, round_)]
            for path in schedule.encoded_paths(round_)[:2]
        )
        for i, j in combinations(schedule.plain_paths(round_), 2):
            total += 1
            det = field.add(
                field.mul(first[i], second[j]), field.mul(first[j], second[i])
            )
            if det == 0:
                failures.append(f"round {round_} paths ({i}, {j})")
    return CheckResult(
        name="coefficient minors",
        passed=total - len(failures),
        total=total,
        failures=failures,
    )


async def _bounded(
    limit: asyncio.Semaphore, func: Callable[..., bool], *args: Any
) -> bool:
    async with limit:
        return await asyncio.to_thread(func, *args)


async def _sweep(
    name: str,
    schedule: Schedule,
    patterns: Iterable[tuple[int, ...]],
    payload_size: int,
    seed: int,
    limit: asyncio.Semaphore,
) -> CheckResult:
    cases = [
        (round_, failed)
        for failed in patterns
        for round_ in range(schedule.m)
    ]
    outcomes = await asyncio.gather(
        *(
            _bounded(limit, sweep_case, schedule, round_, failed, payload_size, seed)
            for round_, failed in cases
        )
    )
    failures = [
        f"round {round_} failed paths {list(failed)}"
        for (round_, failed), ok in zip(cases, outcomes, strict=True)
        if not ok
    ]
    for failure in failures:
        logger.warning("Verification case failed", check=name, case=failure)
    return CheckResult(
        name=name,
        passed=len(cases) - len(failures),
        total=len(cases),
        failures=failures,
    )


def _failure_sets(k: int, size: int) -> list[tuple[int, ...]]:
    return list(combinations(range(k), size))


async def verify_scenario(
    scenario: Scenario,
    seed: int | None = None,
    max_concurrency: int | None = None,
) -> VerificationReport:
    """
    Run every check that applies to the scenario's scheme on cycle 0.

    single: capacity, column budget, single-failure sweep (k·m cases).
    dual: capacity, column budget, single- and two-failure sweeps,
    coefficient minors. priority: capacity, column budget, t-failure sweep
    over every failure set of size 1..t.
    """
    resolved_seed = settings.resolve_seed(seed, scenario.seed)
    limit = asyncio.Semaphore(max_concurrency or settings.VERIFY_MAX_CONCURRENCY)
    schedule = scenario.build_schedule(0)
    k, size = schedule.k, scenario.payload_size

    checks = [_capacity_check(schedule), _column_budget_check(schedule)]
    match scenario.scheme:
        case SchemeKind.SINGLE:
            checks.append(
                await _sweep(
                    "single-failure sweep",
                    schedule,
                    _failure_sets(k, 1),
                    size,
                    resolved_seed,
                    limit,
                )
            )
        case SchemeKind.DUAL:
            checks.append(
                await _sweep(
                    "single-failure sweep",
                    schedule,
                    _failure_sets(k, 1),
                    size,
                    resolved_seed,
                    limit,
                )
            )
            checks.append(
                await _sweep(
                    "two-failure sweep",
                    schedule,
                    _failure_sets(k, 2),
                    size,
                    resolved_seed,
                    limit,
                )
            )
            checks.append(_minor_check(schedule))
        case SchemeKind.PRIORITY:
            patterns = [
                failed
                for count in range(1, schedule.t + 1)
                for failed in _failure_sets(k, count)
            ]
            checks.append(
                await _sweep(
                    "t-failure sweep", schedule, patterns, size, resolved_seed, limit
                )
            )

    report = VerificationReport(
        scenario=scenario.name,
        scheme=scenario.scheme,
        seed=resolved_seed,
        checks=checks,
    )
    logger.info(
        "Verification finished",
        scenario=scenario.name,
        passed=report.passed,
        summary=report.summary(),
    )
    return report

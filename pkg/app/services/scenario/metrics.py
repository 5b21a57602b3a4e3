"""
Metrics report building and rendering.

The JSON document has a stable key set (MetricsReport field order) and no
wall-clock values, so two runs of the same scenario and seed serialize to
identical bytes.
"""

from rich.table import Table

from app.core.constants import CLI
from app.services.coding.codec import RecoveryScenario
from app.services.simnet.models import AdversaryMode, TraceSummary
from app.services.simnet.simulator import eavesdrop_check

from .models import MetricsReport, Scenario


def build_report(
    scenario: Scenario, trace: TraceSummary, runtime_seconds: float = 0.0
) -> MetricsReport:
    """Aggregate a finished run into a MetricsReport."""
    counts = trace.scenario_counts()
    rounds = len(trace.goodput)
    effective = sum(trace.goodput) / rounds if rounds else 0.0
    last = trace.trajectory[-1] if trace.trajectory else None
    has_flows = trace.flows > 0
    secure = (
        eavesdrop_check(trace)
        if trace.adversary_mode is AdversaryMode.EAVESDROP
        else None
    )
    return MetricsReport(
        scenario=scenario.name,
        scheme=scenario.scheme,
        k=trace.k,
        m=trace.m,
        t=trace.t,
        cycles=trace.cycles,
        seed=trace.seed,
        rounds=rounds,
        goodput=list(trace.goodput),
        recovery_counts={kind.value: counts[kind] for kind in RecoveryScenario},
        unrecoverable_rounds=sum(1 for r in trace.reports if r.unrecoverable),
        recovered_payloads=trace.recovered_payloads,
        lost_payloads=trace.lost_payloads,
        capacity_bound=trace.k - trace.t,
        effective_capacity=round(effective, 6),
        convergence_gap=last.gap if last else None,
        final_rates=[round(rate, 9) for rate in last.rates] if last else None,
        flows=trace.flows if has_flows else None,
        split_flows=trace.split_flows() if has_flows else None,
        reordered_flows=trace.reordered_flows() if has_flows else None,
        path_counters=[counter.model_copy() for counter in trace.counters],
        eavesdrop_secure=secure,
        runtime_seconds=runtime_seconds,
    )


def report_json(report: MetricsReport) -> str:
    return report.model_dump_json(indent=2) + "\n"


def report_tables(report: MetricsReport) -> list[Table]:
    """Summary, recovery breakdown and per-path counters as rich tables."""
    summary = Table(title=f"Simulation: {report.scenario}", show_header=False)
    summary.add_column("Metric", style="cyan")
    summary.add_column("Value", style="green")
    summary.add_row("Scheme", report.scheme.value)
    summary.add_row("Paths (k)", str(report.k))
    summary.add_row("Rounds per cycle (m)", str(report.m))
    summary.add_row("Encoded slots per round (t)", str(report.t))
    summary.add_row("Cycles", str(report.cycles))
    summary.add_row("Seed", str(report.seed))
    summary.add_row(
        "Effective capacity",
        f"{report.effective_capacity:.{CLI.RATE_DECIMALS}f} / {report.capacity_bound}",
    )
    summary.add_row("Recovered payloads", str(report.recovered_payloads))
    summary.add_row("Lost payloads", str(report.lost_payloads))
    summary.add_row("Unrecoverable rounds", str(report.unrecoverable_rounds))
    if report.convergence_gap is not None:
        summary.add_row("Convergence gap", f"{report.convergence_gap:.3e}")
    if report.final_rates is not None:
        rates = ", ".join(f"{r:.{CLI.RATE_DECIMALS}f}" for r in report.final_rates)
        summary.add_row("Final rates", rates)
    if report.flows is not None:
        summary.add_row("Flows", str(report.flows))
        summary.add_row("Flows split across paths", str(report.split_flows))
        summary.add_row("Flows reordered", str(report.reordered_flows))
    if report.eavesdrop_secure is not None:
        summary.add_row("Eavesdrop secure", "yes" if report.eavesdrop_secure else "NO")
    summary.add_row("Runtime", f"{report.runtime_seconds:.3f}s")

    recovery = Table(title="Rounds by failure pattern")
    recovery.add_column("Pattern", style="cyan")
    recovery.add_column("Rounds", justify="right")
    for name, count in report.recovery_counts.items():
        recovery.add_row(name, str(count))

    paths = Table(title="Per-path frames")
    for column in ("Path", "Sent", "Delivered", "Late", "Dropped", "In flight"):
        paths.add_column(column, justify="right")
    for counter in report.path_counters:
        paths.add_row(
            f"L{counter.path}",
            str(counter.sent),
            str(counter.delivered),
            str(counter.late),
            str(counter.dropped),
            str(counter.in_flight),
        )
    return [summary, recovery, paths]

"""
Deterministic discrete-event simulator of k paths between one ingress and
one egress.

Events are ordered by (time, kind, path, sequence). Each run derives one
random stream per path, one for the adversary, one for the payloads and one
for flow keys from the scenario seed, so changing one path's model leaves
the others' draws untouched.
"""

import asyncio
from collections.abc import Sequence
import heapq
import itertools
from typing import TYPE_CHECKING

import numpy as np

from app.core.config import settings
from app.core.log import logger
from app.services.balancer.flows import FlowKey, FlowTable
from app.services.balancer.load import (
    DelaySample,
    PathLoad,
    balance_step,
    convergence_gap,
    monitor,
)
from app.services.coding.codec import (
    RecoveryReport,
    RoundBuffer,
    close_round,
    decode_session,
    encode_round,
    ingest,
    new_round_buffer,
    received_plain,
    recover_round,
)
from app.services.coding.errors import FramingError
from app.services.coding.framing import (
    Chunker,
    KeyRing,
    Packet,
    chunk,
    decode_wire,
    decrypt,
    encode_wire,
    encrypt,
    unchunk,
)
from app.services.coding.schedule import Schedule

from .errors import SimulationUsageError
from .models import (
    AdversaryMode,
    BalancerSample,
    EventKind,
    FlowPacket,
    PathCounters,
    SimEvent,
    TraceSummary,
)

if TYPE_CHECKING:
    from app.services.scenario.models import Scenario

_NO_PATH = -1
_FLOW_PROTOCOLS = (6, 17)


class Simulator:
    """One run of one scenario. Single-threaded; not reusable."""

    def __init__(self, scenario: "Scenario") -> None:
        scenario.validate_runnable()
        self.scenario = scenario
        self.seed = settings.resolve_seed(scenario.seed)
        self.k = scenario.k
        self.m = scenario.m
        self.path_models = scenario.resolved_paths()
        self.adversary = scenario.adversary
        self.interval = scenario.round_interval
        self.deadline = round_deadline(scenario)

        streams = np.random.SeedSequence(self.seed).spawn(self.k + 3)
        self._path_rngs = [np.random.default_rng(s) for s in streams[: self.k]]
        adversary_stream = (
            streams[self.k]
            if self.adversary.seed is None
            else np.random.SeedSequence(self.adversary.seed)
        )
        self._adversary_rng = np.random.default_rng(adversary_stream)
        self._payload_rng = np.random.default_rng(streams[self.k + 1])
        self._flow_rng = np.random.default_rng(streams[self.k + 2])

        self.keys = KeyRing.derive(self.k, self.seed)
        self.chunker = Chunker(chunk_size=scenario.payload_size)
        self.load = PathLoad.even(self.k)
        self.flow_table = FlowTable(self.k)

        self._queue: list[tuple[float, int, int, int, SimEvent, bytes]] = []
        self._sequence = itertools.count()
        self._schedules: dict[int, Schedule] = {}
        self._messages: dict[int, bytes] = {}
        self._ciphertexts: dict[int, dict[int, bytes]] = {}
        self._packets: dict[int, list[Packet]] = {}
        self._offered: dict[int, list[float]] = {}
        self._buffers: dict[int, RoundBuffer] = {}
        self._closed: set[int] = set()
        self._cycle_reports: list[RecoveryReport] = []
        self._cycle_plain: dict[int, bytes] = {}
        # (flow id, key, admission round)
        self._active_flows: list[tuple[int, FlowKey, int]] = []
        self._flow_ids = itertools.count()
        self._flow_sent: dict[int, int] = {}
        self._link_free = [0.0] * self.k

        self.counters = [PathCounters(path=path) for path in range(self.k)]
        self.reports: list[RecoveryReport] = []
        self.goodput: list[int] = []
        self.trajectory: list[BalancerSample] = []
        self.transmitted: list[bytes] = []
        self.delivered: list[bytes | None] = []
        self.observer_frames: list[bytes] = []
        self.frames: list[bytes] = []
        self.events: list[SimEvent] = []
        self.flow_packets: list[FlowPacket] = []

    # Event queue

    def _push(self, event: SimEvent, frame: bytes = b"") -> None:
        path_key = _NO_PATH if event.path is None else event.path
        heapq.heappush(
            self._queue,
            (event.time, int(event.kind), path_key, next(self._sequence), event, frame),
        )

    def run(self) -> TraceSummary:
        total_rounds = self.scenario.cycles * self.m
        for global_round in range(total_rounds):
            send_time = global_round * self.interval
            for path in range(self.k):
                self._push(
                    SimEvent(
                        time=send_time,
                        kind=EventKind.SEND,
                        round=global_round,
                        path=path,
                    )
                )

        while self._queue:
            _, _, _, _, event, frame = heapq.heappop(self._queue)
            self.events.append(event)
            match event.kind:
                case EventKind.SEND:
                    self._on_send(event)
                case EventKind.DELIVER:
                    self._on_deliver(event, frame)
                case EventKind.DROP:
                    self.counters[event.path].dropped += 1
                case EventKind.ROUND_CLOSE:
                    self._on_round_close(event)

        for counter in self.counters:
            counter.in_flight = counter.sent - counter.delivered - counter.dropped

        summary = TraceSummary(
            seed=self.seed,
            k=self.k,
            m=self.m,
            t=self._schedules[0].t,
            cycles=self.scenario.cycles,
            adversary_mode=self.adversary.mode,
            reports=self.reports,
            goodput=self.goodput,
            counters=self.counters,
            trajectory=self.trajectory,
            transmitted=self.transmitted,
            delivered=self.delivered,
            observer_frames=self.observer_frames,
            frames=self.frames,
            events=self.events,
            flow_packets=self.flow_packets,
        )
        logger.info(
            "Simulation finished",
            scenario=self.scenario.name,
            seed=self.seed,
            rounds=summary.rounds,
            lost=summary.lost_payloads,
            recovered=summary.recovered_payloads,
            flows=summary.flows,
        )
        return summary

    # Ingress

    def _schedule_for(self, cycle: int) -> Schedule:
        if cycle not in self._schedules:
            self._schedules[cycle] = self.scenario.build_schedule(cycle)
        return self._schedules[cycle]

    def _begin_cycle(self, cycle: int) -> None:
        schedule = self._schedule_for(cycle)
        size = schedule.payloads_per_cycle * self.chunker.chunk_size
        message = self._payload_rng.bytes(size)
        self._messages[cycle] = message
        ciphertexts: dict[int, bytes] = {}
        for ordinal, piece in enumerate(chunk(message, self.chunker)):
            path, _ = schedule.ordinal_index[ordinal]
            nonce = self._nonce(schedule, cycle, ordinal)
            ciphertexts[ordinal] = encrypt(self.keys.for_path(path), piece, nonce)
        self._ciphertexts[cycle] = ciphertexts

    @staticmethod
    def _nonce(schedule: Schedule, cycle: int, ordinal: int) -> int:
        return cycle * schedule.payloads_per_cycle + ordinal

    def _begin_round(self, global_round: int) -> None:
        cycle, round_ = divmod(global_round, self.m)
        if round_ == 0:
            self._begin_cycle(cycle)
        schedule = self._schedule_for(cycle)
        ciphertexts = self._ciphertexts[cycle]
        plain = {ordinal: ciphertexts[ordinal] for ordinal in schedule.ordinals(round_)}
        self._packets[global_round] = encode_round(
            schedule,
            round_,
            plain,
            session=schedule.session,
            sender_id=self.scenario.sender_id,
        )
        protection = [
            (1.0 if schedule.slot(path, round_).is_encoded else 0.0) / self.interval
            for path in range(self.k)
        ]
        config = self.scenario.balancer
        if config.enabled:
            self._balance(global_round, protection)
        shares = list(self.load.rates)
        if config.new_flows:
            self._admit_flows(global_round)
            shares = self._flow_shares()
        self._offered[global_round] = [
            config.offered_load * share + protection[path]
            for path, share in enumerate(shares)
        ]
        if config.new_flows:
            self._send_flow_packets(global_round)
        self._buffers[global_round] = new_round_buffer(
            schedule, round_, session=schedule.session
        )
        self._push(
            SimEvent(
                time=global_round * self.interval + self.deadline,
                kind=EventKind.ROUND_CLOSE,
                round=global_round,
            )
        )

    def _balance(self, global_round: int, protection: list[float]) -> None:
        """Probe each path at its rate and rate + probe step, then rebalance."""
        config = self.scenario.balancer
        samples: list[list[DelaySample]] = []
        for path, model in enumerate(self.path_models):
            rate = self.load.rates[path]
            series = []
            for probe_rate in (rate, rate + config.probe_step):
                offered = config.offered_load * probe_rate + protection[path]
                series.append(DelaySample(rate=probe_rate, delay=model.delay(offered)))
            samples.append(series)
        congestion = monitor(samples, previous=self.load.congestion)
        self.load = balance_step(
            self.load.with_congestion(congestion), config.step_size
        )
        self.trajectory.append(
            BalancerSample(
                round=global_round,
                rates=list(self.load.rates),
                congestion=congestion,
                gap=convergence_gap(self.load.rates, congestion),
            )
        )

    # Flows

    def _new_flow_key(self) -> FlowKey:
        addresses = self._flow_rng.integers(0, 1 << 32, size=2)
        ports = self._flow_rng.integers(0, 1 << 16, size=2)
        protocol = _FLOW_PROTOCOLS[int(self._flow_rng.integers(len(_FLOW_PROTOCOLS)))]
        return FlowKey(
            src_addr=int(addresses[0]),
            dst_addr=int(addresses[1]),
            src_port=int(ports[0]),
            dst_port=int(ports[1]),
            protocol=protocol,
        )

    def _admit_flows(self, global_round: int) -> None:
        """Retire expired flows, then pin this round's arrivals to the split."""
        config = self.scenario.balancer
        self._active_flows = [
            flow
            for flow in self._active_flows
            if flow[2] + config.flow_rounds > global_round
        ]
        rates = list(self.load.rates)
        for _ in range(config.new_flows):
            key = self._new_flow_key()
            self.flow_table.path_for(key, rates)
            self._active_flows.append((next(self._flow_ids), key, global_round))

    def _flow_shares(self) -> list[float]:
        counts = [0] * self.k
        for _, key, _ in self._active_flows:
            counts[self.flow_table.path_for(key)] += 1
        total = sum(counts)
        return [count / total for count in counts]

    def _send_flow_packets(self, global_round: int) -> None:
        """One packet per active flow on its pinned path; links are FIFO."""
        send_time = global_round * self.interval
        offered = self._offered[global_round]
        for flow, key, _ in self._active_flows:
            path = self.flow_table.path_for(key)
            model = self.path_models[path]
            sequence = self._flow_sent.get(flow, 0)
            self._flow_sent[flow] = sequence + 1
            cut = self.adversary.mode in (
                AdversaryMode.SINGLE_LINK,
                AdversaryMode.TWO_LINK,
            ) and self.adversary.targets(path, global_round)
            arrived = None
            if not cut and not model.overloaded(offered[path]):
                arrived = max(
                    send_time + model.delay(offered[path]), self._link_free[path]
                )
                self._link_free[path] = arrived
            self.flow_packets.append(
                FlowPacket(
                    flow=flow,
                    sequence=sequence,
                    round=global_round,
                    path=path,
                    sent=send_time,
                    arrived=arrived,
                )
            )

    def _on_send(self, event: SimEvent) -> None:
        global_round, path = event.round, event.path
        if path == 0:
            self._begin_round(global_round)
        packet = self._packets[global_round][path]
        frame = encode_wire(packet)
        self.frames.append(frame)
        self.counters[path].sent += 1

        model = self.path_models[path]
        # drawn for every frame so the path's stream does not depend on attacks
        jitter = float(self._path_rngs[path].uniform(0.0, 1.0)) * model.jitter
        offered = self._offered[global_round][path]

        mode = self.adversary.mode
        attacked = self.adversary.targets(path, global_round)
        if attacked and mode in (AdversaryMode.SINGLE_LINK, AdversaryMode.TWO_LINK):
            self._drop(event, packet)
            return
        if model.overloaded(offered):
            self._drop(event, packet)
            return
        if attacked and mode is AdversaryMode.TAMPER:
            frame = self._tamper(frame)
        elif attacked and mode is AdversaryMode.EAVESDROP:
            self.observer_frames.append(frame)

        self._push(
            SimEvent(
                time=event.time + model.delay(offered) + jitter,
                kind=EventKind.DELIVER,
                round=global_round,
                path=path,
                packet=packet,
            ),
            frame,
        )

    def _drop(self, event: SimEvent, packet: Packet) -> None:
        self._push(
            SimEvent(
                time=event.time,
                kind=EventKind.DROP,
                round=event.round,
                path=event.path,
                packet=packet,
            )
        )

    def _tamper(self, frame: bytes) -> bytes:
        bits = len(frame) * 8
        rule = self.adversary.tamper_bit
        position = (
            rule % bits if rule is not None else int(self._adversary_rng.integers(bits))
        )
        tampered = bytearray(frame)
        tampered[position // 8] ^= 0x80 >> (position % 8)
        return bytes(tampered)

    # Egress

    def _on_deliver(self, event: SimEvent, frame: bytes) -> None:
        counter = self.counters[event.path]
        counter.delivered += 1
        if event.round in self._closed:
            counter.late += 1
            logger.debug("Late delivery", round=event.round, path=event.path)
            return
        buffer = self._buffers[event.round]
        try:
            packet: Packet | None = decode_wire(frame)
        except FramingError as e:
            logger.debug("Frame rejected", round=event.round, path=event.path, error=e)
            packet = None
        ingest(buffer, event.path, packet)

    def _on_round_close(self, event: SimEvent) -> None:
        global_round = event.round
        cycle, round_ = divmod(global_round, self.m)
        schedule = self._schedule_for(cycle)
        buffer = close_round(self._buffers.pop(global_round))
        self._closed.add(global_round)
        report = recover_round(schedule, buffer)
        self.reports.append(report)
        self._cycle_reports.append(report)
        self._cycle_plain.update(received_plain(schedule, buffer))
        self.goodput.append(schedule.capacity - len(report.lost_ordinals))
        self._packets.pop(global_round, None)
        logger.debug(
            "Round closed",
            round=global_round,
            scenario=report.scenario.value,
            failed=report.failed_paths,
        )
        if round_ == self.m - 1:
            self._finish_cycle(cycle, schedule)

    def _finish_cycle(self, cycle: int, schedule: Schedule) -> None:
        output = decode_session(schedule, self._cycle_reports, self._cycle_plain)
        message = self._messages.pop(cycle)
        pieces = chunk(message, self.chunker)
        self.transmitted.extend(pieces)
        for ordinal, payload in enumerate(output.payloads):
            if payload is None:
                self.delivered.append(None)
                continue
            path, _ = schedule.ordinal_index[ordinal]
            nonce = self._nonce(schedule, cycle, ordinal)
            self.delivered.append(decrypt(self.keys.for_path(path), payload, nonce))
        restored = [p for p in self.delivered[-len(pieces) :] if p is not None]
        if output.loss_count == 0 and unchunk(restored, len(message)) != message:
            logger.warning("Cycle reassembled with corrupt payloads", cycle=cycle)
        self._ciphertexts.pop(cycle, None)
        self._cycle_reports = []
        self._cycle_plain = {}


def round_deadline(scenario: "Scenario") -> float:
    """Configured deadline, else factor × the largest base delay."""
    if scenario.round_deadline is not None:
        return scenario.round_deadline
    largest = max(model.base_delay for model in scenario.resolved_paths())
    deadline = settings.ROUND_DEADLINE_FACTOR * largest
    return deadline if deadline > 0 else scenario.round_interval


def run(scenario: "Scenario") -> TraceSummary:
    """Run one scenario to completion."""
    return Simulator(scenario).run()


def eavesdrop_check(trace: TraceSummary) -> bool:
    """
    True iff no frame captured by the observer carries a plaintext chunk.

    Raises:
        SimulationUsageError: the run had no eavesdropping adversary
    """
    if trace.adversary_mode is not AdversaryMode.EAVESDROP:
        raise SimulationUsageError(
            f"eavesdrop check needs an eavesdrop run, got {trace.adversary_mode.value}"
        )
    plaintext = set(trace.transmitted)
    for frame in trace.observer_frames:
        try:
            packet = decode_wire(frame)
        except FramingError:
            continue
        if packet.payload in plaintext:
            return False
    return True


async def run_many(
    scenarios: Sequence["Scenario"], max_concurrency: int | None = None
) -> list[TraceSummary]:
    """Run independent scenarios in worker threads, one event loop each."""
    limit = asyncio.Semaphore(max_concurrency or settings.VERIFY_MAX_CONCURRENCY)

    async def _run_one(scenario: "Scenario") -> TraceSummary:
        async with limit:
            return await asyncio.to_thread(run, scenario)

    return await asyncio.gather(*(_run_one(scenario) for scenario in scenarios))


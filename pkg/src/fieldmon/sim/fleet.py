"""Fleet runner: a deterministic discrete-event simulation driving device
actors against a live server.

Events are processed from a heap ordered by (time, priority, sequence), so
a scenario seed fixes the entire interleaving. Crashes bump a per-device
epoch: an upload whose receipt would arrive after a crash loses its ack
(the server kept the bytes; the buffer keeps the batch; the retry earns a
DUPLICATE), which is exactly the at-least-once/exactly-once story the
ingestion contract promises. Restart is immediate — the auto-start is
modeled as losing in-flight sync state, never recorded data.
"""

import hashlib
import heapq
import json
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from ..errors import ScenarioInvalid
from ..server import ServerCore
from .clock import SimClock
from .device import DeviceActor, sync_decision, SyncVerdict
from .scenario import Scenario
from .transport import DirectTransport, HttpTransport

# same-instant processing order
PRIO_TICK = 0
PRIO_CRASH = 1
PRIO_XFER = 2   # send/ack chain
PRIO_CHECK = 3
PRIO_ADMIN = 4


@dataclass
class FleetResult:
    scenario: Scenario
    event_log: list[str]
    actors: list[DeviceActor]
    generated_oids: dict[str, set[str]]  # subject label -> sha256 of generated payloads
    stored_oids: Optional[set[str]]      # in-process runs only
    duplicates: int
    crashes: int
    sim_duration_s: float
    wall_s: float

    @property
    def speedup(self) -> float:
        return self.sim_duration_s / self.wall_s if self.wall_s > 0 else float("inf")

    def log_bytes(self) -> bytes:
        return ("\n".join(self.event_log) + "\n").encode("utf-8")


class _Runner:
    def __init__(self, scenario: Scenario, transport, clockport, pace_speedup=None):
        self.sc = scenario
        self.transport = transport
        self.clockport = clockport
        self.pace = pace_speedup
        self.heap: list = []
        self.seq = 0
        self.log: list[str] = []
        self.actors = [DeviceActor(scenario, i, spec) for i, spec in enumerate(scenario.devices)]
        self.secrets: dict[int, str] = {}
        self.payloads: dict[int, str] = {}
        self.generated_oids: dict[str, set[str]] = {
            spec.subject_label: set() for spec in scenario.devices
        }
        self.duplicates = 0
        self.crashes = 0

    # -- plumbing -------------------------------------------------------------

    def push(self, t_s: float, prio: int, fn, *args) -> None:
        heapq.heappush(self.heap, (t_s, prio, self.seq, fn, args))
        self.seq += 1

    def emit(self, t_s: float, device: Optional[int], event: str, **fields) -> None:
        record = {
            "t": round(t_s - self.sc.start_s, 3),
            "device": self.sc.devices[device].subject_label if device is not None else "admin",
            "event": event,
        }
        record.update(fields)
        self.log.append(json.dumps(record, sort_keys=True, separators=(",", ":")))

    def fail(self, doc: dict, what: str) -> None:
        raise ScenarioInvalid(f"{what} failed: {doc.get('error_code')}: {doc.get('detail')}")

    # -- setup -------------------------------------------------------------------

    def setup(self) -> None:
        self.clockport(self.sc.start_s)
        doc = self.transport.create_study(self.sc.study)
        if "error_code" in doc:
            self.fail(doc, "create_study")
        study_id = doc["study_id"]
        for i, spec in enumerate(self.sc.devices):
            tokens = self.transport.generate_tokens(study_id, spec.subject_label, 2)
            if isinstance(tokens, dict):
                self.fail(tokens, "generate_tokens")
            self.payloads[i] = tokens[0]["qr_payload"]
            self.secrets[i] = json.loads(tokens[0]["qr_payload"])["secret"]
            self.push(self.sc.start_s + spec.join_at_s, PRIO_TICK, self.ev_enroll, i)
        for idx, t_off in self.sc.manual_syncs:
            self.push(self.sc.start_s + t_off, PRIO_CHECK, self.ev_sync_check, idx, True)
        for msg in self.sc.messages:
            self.push(self.sc.start_s + float(msg["t_s"]), PRIO_ADMIN, self.ev_message, msg)

    # -- events ---------------------------------------------------------------------

    def ev_enroll(self, t_s: float, i: int) -> None:
        actor = self.actors[i]
        doc = self.transport.enroll(self.payloads[i], actor.device_id)
        if "error_code" in doc:
            self.fail(doc, f"enroll {actor.spec.subject_label}")
        actor.activate(doc["registration"], doc["config"])
        self.emit(t_s, i, "enrolled", token=actor.token_id)
        for sensor in actor.chosen_sensors():
            for k, tick in enumerate(actor.tick_times(sensor)):
                self.push(tick, PRIO_TICK, self.ev_tick, i, sensor, k)
        end = self.sc.start_s + self.sc.duration_s
        t = t_s + self.sc.sync_interval_s
        while t < end:
            self.push(t, PRIO_CHECK, self.ev_sync_check, i, False)
            t += self.sc.sync_interval_s
        self.push(end, PRIO_CHECK, self.ev_sync_check, i, False)  # final drain
        for c in actor.spec.crash_times:
            self.push(self.sc.start_s + c, PRIO_CRASH, self.ev_crash, i)

    def ev_tick(self, t_s: float, i: int, sensor: str, k: int) -> None:
        actor = self.actors[i]
        batch = actor.make_batch(sensor, k, t_s)
        if batch is not None:
            actor.buffer.add(batch)
            self.generated_oids[actor.spec.subject_label].add(
                hashlib.sha256(batch.payload).hexdigest()
            )

    def ev_crash(self, t_s: float, i: int) -> None:
        actor = self.actors[i]
        actor.crash_epoch += 1
        self.crashes += 1
        was_syncing = actor.syncing
        actor.syncing = False
        self.emit(t_s, i, "crash", during_sync=was_syncing)
        # auto-restart is immediate; resume syncing shortly after
        self.push(t_s + self.sc.crash_retry_s, PRIO_CHECK, self.ev_sync_check, i, False)

    def ev_sync_check(self, t_s: float, i: int, manual: bool) -> None:
        actor = self.actors[i]
        if actor.token_id is None or actor.syncing:
            return
        offset = t_s - self.sc.start_s
        verdict = sync_decision(
            len(actor.buffer.pending),
            actor.spec.wifi_at(offset),
            actor.spec.battery_at(offset),
            manual_pending=manual,
        )
        if verdict is SyncVerdict.SYNC and actor.buffer.pending:
            actor.syncing = True
            actor.sync_epoch = actor.crash_epoch
            actor.sync_sent = 0
            actor.sync_dups = 0
            self.push(t_s, PRIO_XFER, self.ev_send, i)

    def ev_send(self, t_s: float, i: int) -> None:
        actor = self.actors[i]
        if not actor.syncing or actor.sync_epoch != actor.crash_epoch:
            return
        if not actor.buffer.pending:
            self.finish_sync(t_s, i)
            return
        batch = actor.buffer.pending[0]
        doc = self.transport.submit_batch(
            actor.batch_meta(batch), batch.payload, self.secrets[i]
        )
        if "error_code" in doc:
            # contract violations stop the run loudly; a healthy scenario
            # never produces them
            self.fail(doc, f"submit {batch.batch_id}")
        if doc["outcome"] == "DUPLICATE":
            self.duplicates += 1
            actor.sync_dups += 1
        self.push(t_s + self.sc.upload_s, PRIO_XFER, self.ev_ack, i, batch.batch_id, actor.sync_epoch)

    def ev_ack(self, t_s: float, i: int, batch_id: str, epoch: int) -> None:
        actor = self.actors[i]
        if actor.crash_epoch != epoch:
            self.emit(t_s, i, "ack_lost", batch=batch_id)
            return
        actor.buffer.ack(batch_id)  # delete local data right after sync
        actor.sync_sent += 1
        if actor.buffer.pending:
            self.push(t_s, PRIO_XFER, self.ev_send, i)
        else:
            self.finish_sync(t_s, i)

    def finish_sync(self, t_s: float, i: int) -> None:
        actor = self.actors[i]
        actor.syncing = False
        self.emit(t_s, i, "sync", sent=actor.sync_sent, duplicates=actor.sync_dups)
        msgs = self.transport.poll_notifications(actor.token_id, self.secrets[i])
        if isinstance(msgs, list):
            for m in msgs:
                actor.notifications.append(m)
                self.emit(t_s, i, "notification", title=m["title"])

    def ev_message(self, t_s: float, msg: dict) -> None:
        doc = self.transport.notify(
            self.sc.study["study_id"], msg["title"], msg["body"], msg.get("receiver", "ALL")
        )
        if "error_code" in doc:
            self.fail(doc, "notify")
        self.emit(t_s, None, "message_sent", title=msg["title"],
                  queued=doc["queued_deliveries"])

    # -- main loop ----------------------------------------------------------------------

    def run(self) -> None:
        self.setup()
        prev_t = self.sc.start_s
        while self.heap:
            t_s, _prio, _seq, fn, args = heapq.heappop(self.heap)
            if self.pace:
                dt = (t_s - prev_t) / self.pace
                if dt > 0:
                    time.sleep(min(dt, 1.0))
            prev_t = t_s
            self.clockport(t_s)
            fn(t_s, *args)


def run_fleet(
    scenario: Scenario,
    data_dir: Optional[Path] = None,
    core: Optional[ServerCore] = None,
    sim_clock: Optional[SimClock] = None,
    server_url: Optional[str] = None,
    admin_key: str = "admin",
    log_path: Optional[Path] = None,
    pace_speedup: Optional[float] = None,
) -> FleetResult:
    """Run a scenario against an in-process core (default), a caller-owned
    core (pass the SimClock its clock reads from), or a remote sim-enabled
    server."""
    scenario.validate()
    clock = sim_clock or SimClock(scenario.start_s)
    clock.set_s(scenario.start_s)

    if server_url is not None:
        transport = HttpTransport(server_url, admin_key)

        def clockport(t_s: float) -> None:
            clock.set_s(t_s)
            transport.set_time(clock.now_dt())

    else:
        if core is None:
            if data_dir is None:
                raise ScenarioInvalid("in-process runs need data_dir or core")
            core = ServerCore(Path(data_dir), admin_key=admin_key, clock=clock.now_dt)
        transport = DirectTransport(core)

        def clockport(t_s: float) -> None:
            clock.set_s(t_s)

    runner = _Runner(scenario, transport, clockport, pace_speedup)
    t_start = time.monotonic()
    runner.run()
    wall = time.monotonic() - t_start

    stored = None
    if core is not None:
        stored = core.store.object_ids(scenario.study["study_id"])
    result = FleetResult(
        scenario=scenario,
        event_log=runner.log,
        actors=runner.actors,
        generated_oids=runner.generated_oids,
        stored_oids=stored,
        duplicates=runner.duplicates,
        crashes=runner.crashes,
        sim_duration_s=scenario.duration_s,
        wall_s=wall,
    )
    if log_path is not None:
        Path(log_path).write_bytes(result.log_bytes())
    return result

import json
import threading
from datetime import datetime, timezone

import pytest

from fieldmon.errors import ScenarioInvalid
from fieldmon.qc import Flag
from fieldmon.server import ServerCore
from fieldmon.sim import Scenario, run_fleet
from fieldmon.sim.clock import SimClock
from fieldmon.sim.device import BATTERY_MIN_PCT, sync_decision, SyncVerdict
from fieldmon.sim.scenario import build_campaign


class TestSyncDecision:
    def test_wifi_battery_and_data(self):
        assert sync_decision(3, True, 80.0) is SyncVerdict.SYNC

    def test_low_battery_holds(self):
        assert sync_decision(3, True, 10.0) is SyncVerdict.HOLD
        assert sync_decision(3, True, BATTERY_MIN_PCT) is SyncVerdict.SYNC

    def test_no_wifi_holds_but_manual_overrides(self):
        assert sync_decision(3, False, 80.0) is SyncVerdict.HOLD
        assert sync_decision(3, False, 80.0, manual_pending=True) is SyncVerdict.SYNC

    def test_empty_buffer_holds(self):
        assert sync_decision(0, True, 80.0) is SyncVerdict.HOLD


class TestScenarioFile:
    def test_roundtrip(self, tmp_path):
        sc = build_campaign(3, 0.5, seed=9)
        path = tmp_path / "scenario.json"
        sc.save(path)
        loaded = Scenario.load(path)
        assert loaded.to_doc() == sc.to_doc()

    def test_invalid_documents(self, tmp_path):
        with pytest.raises(ScenarioInvalid):
            Scenario.from_doc({"seed": 1})
        sc = build_campaign(1, 0.5, seed=9)
        doc = sc.to_doc()
        doc["devices"] = []
        with pytest.raises(ScenarioInvalid):
            Scenario.from_doc(doc)
        doc2 = sc.to_doc()
        doc2["devices"][0]["crash_times"] = [1e12]
        with pytest.raises(ScenarioInvalid):
            Scenario.from_doc(doc2)
        bad = tmp_path / "bad.json"
        bad.write_text("{nope")
        with pytest.raises(ScenarioInvalid):
            Scenario.load(bad)


class TestHappyPath:
    def test_single_device_day_stores_everything_once(self, tmp_path):
        sc = build_campaign(1, 1.0, seed=21, crashes_per_device=0.0)
        result = run_fleet(sc, data_dir=tmp_path / "data")
        generated = result.generated_oids["S_00000"]
        # location 144, activity 288, one usage snapshot
        assert len(generated) == 144 + 288 + 1
        assert result.stored_oids == generated
        assert result.duplicates == 0
        assert not result.actors[0].buffer.pending

    def test_event_log_bit_identical_for_fixed_seed(self, tmp_path):
        sc = build_campaign(2, 1.0, seed=33, crashes_per_device=2.0)
        r1 = run_fleet(sc, data_dir=tmp_path / "a")
        r2 = run_fleet(sc, data_dir=tmp_path / "b")
        assert r1.log_bytes() == r2.log_bytes()
        assert r1.stored_oids == r2.stored_oids

    def test_different_seeds_differ(self, tmp_path):
        r1 = run_fleet(build_campaign(1, 0.25, seed=1), data_dir=tmp_path / "a")
        r2 = run_fleet(build_campaign(1, 0.25, seed=2), data_dir=tmp_path / "b")
        assert r1.stored_oids != r2.stored_oids


class TestCrashRecovery:
    def test_crash_resend_yields_duplicates_not_new_objects(self, tmp_path):
        sc = build_campaign(1, 1.0, seed=55, crashes_per_device=6.0)
        assert sc.devices[0].crash_times, "campaign should schedule crashes"
        result = run_fleet(sc, data_dir=tmp_path / "data")
        assert result.crashes == len(sc.devices[0].crash_times)
        assert result.stored_oids == result.generated_oids["S_00000"]

    def test_crash_run_matches_no_crash_run(self, tmp_path):
        sc = build_campaign(2, 1.0, seed=77, crashes_per_device=5.0)
        with_crashes = run_fleet(sc, data_dir=tmp_path / "a")
        without = run_fleet(sc.without_crashes(), data_dir=tmp_path / "b")
        assert with_crashes.crashes > 0 and without.crashes == 0
        assert with_crashes.stored_oids == without.stored_oids
        assert with_crashes.duplicates >= 0

    def test_mid_upload_crash_logged_as_lost_ack(self, tmp_path):
        # enough crashes that some land inside a transfer window
        sc = build_campaign(2, 1.0, seed=101, crashes_per_device=30.0)
        result = run_fleet(sc, data_dir=tmp_path / "data")
        events = [json.loads(line)["event"] for line in result.event_log]
        assert "crash" in events
        if "ack_lost" in events:
            assert result.duplicates > 0
        assert result.stored_oids == set().union(*result.generated_oids.values())


class TestConfigDriftsDeviceBehavior:
    def test_no_gyroscope_spec_no_gyroscope_batches(self, tmp_path):
        sc = build_campaign(
            1, 0.25, seed=5,
            sensors=[{"name": "location", "frequency": 600},
                     {"name": "accelerometer", "frequency": 25}],
        )
        result = run_fleet(sc, data_dir=tmp_path / "data")
        core_sensors = {
            json.loads(line).get("sensor")
            for line in result.event_log
            if json.loads(line).get("sensor")
        }
        actor = result.actors[0]
        assert actor.chosen_sensors() == ["location", "accelerometer"]
        manifest_sensors = {p.split("/")[1] for p, _ in _manifest(tmp_path / "data", sc)}
        assert "gyroscope" not in manifest_sensors
        assert "location" in manifest_sensors

    def test_still_gate_suppresses_imu_batches(self, tmp_path):
        sc = build_campaign(
            1, 0.25, seed=6,
            sensors=[{"name": "accelerometer", "frequency": 25}],
        )
        result = run_fleet(sc, data_dir=tmp_path / "data")
        actor = result.actors[0]
        n_ticks = len(actor.tick_times("accelerometer"))
        n_batches = actor.buffer.generated
        assert 0 < n_batches < n_ticks  # paused while still, recording while walking


class TestPredicates:
    def test_silenced_device_holds_then_qc_flags(self, tmp_path):
        sc = build_campaign(
            2, 3.0, seed=88, crashes_per_device=0.0,
            silenced_device=1, silence_after_s=0.5 * 86400.0,
        )
        clock = SimClock(sc.start_s)
        core = ServerCore(tmp_path / "data", admin_key="admin", clock=clock.now_dt)
        result = run_fleet(sc, core=core, sim_clock=clock)
        silenced = result.actors[1]
        assert silenced.buffer.pending  # unsent data still buffered locally
        rows = {r.token_id: r for r in core.qc_table(sc.study["study_id"])}
        assert Flag.NO_DATA_48H in rows[silenced.token_id].flags
        assert Flag.NO_DATA_48H not in rows[result.actors[0].token_id].flags

    def test_manual_sync_without_wifi(self, tmp_path):
        sc = build_campaign(1, 0.25, seed=12, crashes_per_device=0.0)
        sc.devices[0].wifi = [(0.0, False)]  # never auto-syncs
        sc.manual_syncs = [(0, 0.2 * 86400.0)]
        result = run_fleet(sc, data_dir=tmp_path / "data")
        syncs = [json.loads(l) for l in result.event_log if json.loads(l)["event"] == "sync"]
        assert len(syncs) == 1
        assert syncs[0]["sent"] > 0
        assert result.actors[0].buffer.pending  # later ticks stay buffered


class TestNotificationsInFleet:
    def test_message_reaches_syncing_device(self, tmp_path):
        sc = build_campaign(2, 0.25, seed=13, crashes_per_device=0.0)
        sc.messages = [{"t_s": 3600.0, "title": "hello", "body": "please keep the app on",
                        "receiver": "ALL"}]
        result = run_fleet(sc, data_dir=tmp_path / "data")
        for actor in result.actors:
            assert [m["title"] for m in actor.notifications] == ["hello"]


class TestTransportEquivalence:
    def test_direct_and_http_reach_identical_end_state(self, tmp_path):
        sc = build_campaign(2, 0.25, seed=44, crashes_per_device=2.0)

        direct = run_fleet(sc, data_dir=tmp_path / "direct")

        import uvicorn

        from fieldmon.api import create_app, sim_aware_clock

        clock = SimClock(sc.start_s)
        core = ServerCore(tmp_path / "http", admin_key="admin",
                          clock=sim_aware_clock(clock.now_dt))
        app = create_app(core, allow_sim_time=True)
        config = uvicorn.Config(app, host="127.0.0.1", port=8431, log_level="error")
        server = uvicorn.Server(config)
        thread = threading.Thread(target=server.run, daemon=True)
        thread.start()
        import time

        for _ in range(100):
            if server.started:
                break
            time.sleep(0.05)
        try:
            http = run_fleet(sc, server_url="http://127.0.0.1:8431", admin_key="admin")
        finally:
            server.should_exit = True
            thread.join(timeout=5)

        assert core.store.object_ids(sc.study["study_id"]) == direct.stored_oids
        assert http.log_bytes() == direct.log_bytes()


def _manifest(data_dir, sc):
    from fieldmon.datastore import DataStore

    return DataStore(data_dir).manifest(sc.study["study_id"])

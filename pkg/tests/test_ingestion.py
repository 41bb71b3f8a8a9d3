import hashlib
import uuid
from concurrent.futures import ThreadPoolExecutor
from datetime import timedelta

import pytest

from fieldmon.enrollment import LeaveReason, encode_qr_payload
from fieldmon.errors import (
    ChecksumMismatch,
    EmptyObject,
    SensorNotInStudy,
    StudyClosed,
    AuthFailure,
    UnknownRegistration,
)
from fieldmon.ingestion import Outcome, SensorBatch, verify_checksum

from .conftest import ppd_config


@pytest.fixture
def enrolled(core, clock):
    core.create_study(ppd_config())
    token = core.enrollment.generate_tokens("ppd_study", "S1", 1)[0]
    core.activate(encode_qr_payload(token), "dev-1")
    return token


def make_batch(token, payload: bytes, sensor="location", batch_id=None, created_at=None, clock=None):
    return SensorBatch(
        study_id=token.study_id,
        token_id=token.token_id,
        device_id="dev-1",
        sensor=sensor,
        batch_id=batch_id or str(uuid.uuid4()),
        created_at=created_at or clock.now,
        payload=payload,
        md5_hex=hashlib.md5(payload).hexdigest(),
    )


class TestChecksum:
    def test_rfc1321_vectors(self):
        assert verify_checksum(b"", "d41d8cd98f00b204e9800998ecf8427e")
        assert verify_checksum(b"abc", "900150983cd24fb0d6963f7d28e17f72")
        assert verify_checksum(b"message digest", "f96b697d7cb7938d525a2f31aaf161d0")

    def test_case_insensitive(self):
        assert verify_checksum(b"abc", "900150983CD24FB0D6963F7D28E17F72")

    def test_wrong_digest(self):
        assert not verify_checksum(b"abc", hashlib.md5(b"abd").hexdigest())


class TestSubmit:
    def test_stored_and_retrievable(self, core, clock, enrolled):
        b = make_batch(enrolled, b"sample-bytes", clock=clock)
        receipt = core.submit_batch(b, enrolled.secret)
        assert receipt.outcome is Outcome.STORED
        assert core.store.get_object("ppd_study", receipt.object_ref) == b"sample-bytes"

    def test_corrupted_payload_rejected_without_write(self, core, clock, enrolled):
        b = make_batch(enrolled, b"sample-bytes", clock=clock)
        corrupted = SensorBatch(
            **{**b.__dict__, "payload": b"sample-byteX"}
        )
        before = core.store.object_ids("ppd_study")
        with pytest.raises(ChecksumMismatch):
            core.submit_batch(corrupted, enrolled.secret)
        assert core.store.object_ids("ppd_study") == before

    def test_replay_is_idempotent(self, core, clock, enrolled):
        b = make_batch(enrolled, b"once", clock=clock)
        outcomes = [core.submit_batch(b, enrolled.secret).outcome for _ in range(10)]
        assert outcomes.count(Outcome.STORED) == 1
        assert outcomes.count(Outcome.DUPLICATE) == 9
        assert len(core.store.object_ids("ppd_study")) == 1
        refs = {core.submit_batch(b, enrolled.secret).object_ref}
        assert refs == {core.store.object_ids("ppd_study").pop()}

    def test_empty_payload_rejected(self, core, clock, enrolled):
        b = SensorBatch(
            study_id="ppd_study", token_id=enrolled.token_id, device_id="dev-1",
            sensor="location", batch_id=str(uuid.uuid4()), created_at=clock.now,
            payload=b"", md5_hex="d41d8cd98f00b204e9800998ecf8427e",
        )
        with pytest.raises(EmptyObject):
            core.submit_batch(b, enrolled.secret)

    def test_wrong_secret(self, core, clock, enrolled):
        b = make_batch(enrolled, b"x", clock=clock)
        with pytest.raises(AuthFailure):
            core.submit_batch(b, "00" * 16)

    def test_sensor_not_in_study(self, core, clock, enrolled):
        b = make_batch(enrolled, b"x", sensor="gyroscope", clock=clock)
        with pytest.raises(SensorNotInStudy):
            core.submit_batch(b, enrolled.secret)

    def test_unregistered_token(self, core, clock, enrolled):
        core.enrollment.generate_tokens("ppd_study", "S2", 1)
        ghost = core.enrollment.token("S2_1")
        b = make_batch(ghost, b"x", clock=clock)
        with pytest.raises(UnknownRegistration):
            core.submit_batch(b, ghost.secret)

    def test_upload_after_close_rejected(self, core, clock, enrolled):
        core.close_study("ppd_study")
        b = make_batch(enrolled, b"x", clock=clock)
        with pytest.raises(StudyClosed):
            core.submit_batch(b, enrolled.secret)

    def test_leave_grace_window(self, core, clock, enrolled):
        created_before_leave = clock.now
        clock.advance(60)
        core.leave_study(enrolled.token_id, LeaveReason.USER_LEFT)
        # buffered sample recorded before the leave: accepted within 24 h
        clock.advance(3600)
        b = make_batch(enrolled, b"late", created_at=created_before_leave, clock=clock)
        assert core.submit_batch(b, enrolled.secret).outcome is Outcome.STORED
        # sample recorded after the leave: rejected
        b2 = make_batch(enrolled, b"too-new", created_at=clock.now, clock=clock)
        with pytest.raises(StudyClosed):
            core.submit_batch(b2, enrolled.secret)
        # outside the grace window entirely
        clock.advance(25 * 3600)
        b3 = make_batch(enrolled, b"too-late", created_at=created_before_leave, clock=clock)
        with pytest.raises(StudyClosed):
            core.submit_batch(b3, enrolled.secret)


class TestCounts:
    def test_counts_and_last_received(self, core, clock, enrolled):
        for i in range(29):
            clock.advance(600)
            core.submit_batch(make_batch(enrolled, f"p{i}".encode(), sensor="activity", clock=clock),
                              enrolled.secret)
        counts = core.ingestion.batch_counts("ppd_study")
        entry = counts[(enrolled.token_id, "activity")]
        assert entry["n_batches"] == 29
        assert entry["last_received"] == clock.now

    def test_no_batches_absent(self, core, clock, enrolled):
        assert (enrolled.token_id, "location") not in core.ingestion.batch_counts("ppd_study")
        assert core.ingestion.tally("ppd_study", enrolled.token_id, "location").n_batches == 0

    def test_duplicates_not_double_counted(self, core, clock, enrolled):
        b = make_batch(enrolled, b"x", sensor="activity", clock=clock)
        core.submit_batch(b, enrolled.secret)
        core.submit_batch(b, enrolled.secret)
        assert core.ingestion.batch_counts("ppd_study")[(enrolled.token_id, "activity")]["n_batches"] == 1


class TestConcurrency:
    def test_exactly_once_under_concurrent_replay(self, core, clock, enrolled):
        batches = [make_batch(enrolled, f"payload-{i}".encode(), clock=clock) for i in range(100)]
        submissions = batches * 3

        def submit(b):
            return core.submit_batch(b, enrolled.secret).outcome

        with ThreadPoolExecutor(max_workers=16) as pool:
            outcomes = list(pool.map(submit, submissions))
        assert outcomes.count(Outcome.STORED) == 100
        assert outcomes.count(Outcome.DUPLICATE) == 200
        assert len(core.store.object_ids("ppd_study")) == 100
        assert core.store.fsck("ppd_study").clean

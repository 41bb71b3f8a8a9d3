"""Participant-table reference fixture: six registrations across four
subjects with known dates, leaves, and batch tallies, driven through the
real services with a manual clock. The expected columns are frozen below
and every QC rule is exercised: user-left and missing-data status codes,
the 48-hour silence flag, multiple active codes for one subject, receipts
during the post-leave grace window, and a receipt predating registration
(out-of-order server clock)."""

import hashlib
import uuid
from datetime import datetime, timedelta, timezone

from fieldmon.enrollment import LeaveReason, encode_qr_payload
from fieldmon.ingestion import SensorBatch

from .conftest import ManualClock, ppd_config, utc

NOW = utc(2020, 8, 11, 13, 0, 0)

EXPECTED_ORDER = [
    "Test_080720_00016_4",
    "Test_080720_00020_1",
    "Test_080720_00020_2",
    "Test_080720_00021_1",
    "Test_080720_00021_2",
    "Test_080720_00022_1",
]
EXPECTED_DAYS = [27, 5, 1, 11, 1, 0]
EXPECTED_CODES = [3, 1, None, 3, None, 1]

DEVICE_IDS = {
    "Test_080720_00016_4": "05e74f59-6e99-4ed9-8705-2134a13a6a63",
    "Test_080720_00020_1": "c08ae95d-2abe-4c58-a13d-15c3772990ff",
    "Test_080720_00020_2": "a7bcac28-7d8f-44b3-b06f-313250719ca2",
    "Test_080720_00021_1": "a7affcb7-c4d9-4375-8a34-b2cb4924efc4",
    "Test_080720_00021_2": "d9a5321d-04d7-4588-84a1-2752bbb2aef",
    "Test_080720_00022_1": "a5fa288b-a507-4663-8488-c0ba5d709128",
}

REGISTERED = {
    "Test_080720_00016_4": utc(2020, 7, 15, 12, 56, 44),
    "Test_080720_00020_1": utc(2020, 8, 5, 12, 6, 12),
    "Test_080720_00020_2": utc(2020, 8, 10, 12, 58, 9),
    "Test_080720_00021_1": utc(2020, 7, 30, 16, 17, 6),
    "Test_080720_00021_2": utc(2020, 8, 10, 11, 43, 6),
    "Test_080720_00022_1": utc(2020, 8, 10, 11, 44, 13),
}

LEFT = {
    "Test_080720_00020_1": utc(2020, 8, 10, 23, 6, 19),
    "Test_080720_00022_1": utc(2020, 8, 10, 11, 52, 4),
}

# (token, sensor) -> (count, last received); receipts before the last one
# are backfilled at ten-minute steps
TALLIES = {
    ("Test_080720_00020_1", "activity"): (29, utc(2020, 8, 10, 23, 6, 25)),
    ("Test_080720_00020_1", "application_usage"): (43, utc(2020, 8, 10, 23, 6, 25)),
    ("Test_080720_00020_1", "location"): (22, utc(2020, 8, 10, 23, 6, 25)),
    ("Test_080720_00020_2", "activity"): (2, utc(2020, 8, 11, 12, 44, 16)),
    ("Test_080720_00020_2", "application_usage"): (2, utc(2020, 8, 11, 12, 44, 16)),
    ("Test_080720_00020_2", "location"): (2, utc(2020, 8, 11, 12, 44, 16)),
    ("Test_080720_00021_1", "location"): (1, utc(2020, 7, 30, 16, 15, 14)),
    ("Test_080720_00022_1", "activity"): (1, utc(2020, 8, 10, 11, 52, 3)),
    ("Test_080720_00022_1", "application_usage"): (1, utc(2020, 8, 10, 11, 52, 3)),
    ("Test_080720_00022_1", "location"): (1, utc(2020, 8, 10, 11, 52, 3)),
}

STUDY_ID = "ppd_study"


def build(core, clock: ManualClock) -> None:
    clock.set(utc(2020, 7, 8, 9, 0, 0))
    core.create_study(ppd_config(STUDY_ID))

    tokens = {}
    for subject, n in [
        ("Test_080720_00016", 4),
        ("Test_080720_00020", 4),
        ("Test_080720_00021", 4),
        ("Test_080720_00022", 4),
    ]:
        for t in core.enrollment.generate_tokens(STUDY_ID, subject, n):
            tokens[t.token_id] = t

    for token_id, registered_at in sorted(REGISTERED.items(), key=lambda kv: kv[1]):
        clock.set(registered_at)
        core.activate(encode_qr_payload(tokens[token_id]), DEVICE_IDS[token_id])

    for (token_id, sensor), (count, last) in TALLIES.items():
        token = tokens[token_id]
        left_at = LEFT.get(token_id)
        for i in range(count):
            received = last - timedelta(minutes=10 * (count - 1 - i))
            created = received
            if left_at is not None and created > left_at:
                created = left_at - timedelta(seconds=5)
            clock.set(received)
            payload = f"{token_id}/{sensor}/{i}".encode()
            core.submit_batch(
                SensorBatch(
                    study_id=STUDY_ID,
                    token_id=token_id,
                    device_id=DEVICE_IDS[token_id],
                    sensor=sensor,
                    batch_id=str(uuid.uuid5(uuid.NAMESPACE_OID, f"{token_id}/{sensor}/{i}")),
                    created_at=created,
                    payload=payload,
                    md5_hex=hashlib.md5(payload).hexdigest(),
                ),
                token.secret,
            )

    for token_id, left_at in LEFT.items():
        clock.set(left_at)
        core.leave_study(token_id, LeaveReason.USER_LEFT)

    clock.set(NOW)

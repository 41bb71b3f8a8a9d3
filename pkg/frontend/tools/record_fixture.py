#!/usr/bin/env python3
"""Record real API responses into fixtures/recorded_api.json.

Drives the actual server in-process (the reference participant-table
fixture plus extra minted subjects) and snapshots every response the
dashboard pages need, so the UI tests replay production-shaped documents
without a live server.

Run from the repository root: python3 frontend/tools/record_fixture.py
"""

import json
import sys
from pathlib import Path

from fastapi.testclient import TestClient

REPO_ROOT = Path(__file__).resolve().parents[2]
sys.path.insert(0, str(REPO_ROOT))

from fieldmon.api import create_app  # noqa: E402
from fieldmon.server import ServerCore  # noqa: E402
from tests.conftest import ManualClock, utc  # noqa: E402
from tests import reference_table  # noqa: E402

ADMIN = {"X-Admin-Key": "recorded-admin"}

CREATE_REQUEST = {
    "study_id": "ppd_followup",
    "name": "PPD remote-monitoring followup",
    "description": "postpartum phone-usage study (84 days, 60 subjects)",
    "duration_days": 84,
    "n_subjects": 60,
    "sensors": [
        {"name": "activity", "frequency": 300},
        {"name": "application_usage", "frequency": 86400},
        {"name": "location", "frequency": 600},
    ],
}


def main() -> None:
    import tempfile

    clock = ManualClock(utc(2020, 7, 1))
    core = ServerCore(Path(tempfile.mkdtemp()) / "data", admin_key="recorded-admin", clock=clock)
    client = TestClient(create_app(core))

    reference_table.build(core, clock)
    # pad the roster so the overview counters look like a real campaign
    for i in range(56):
        core.enrollment.generate_tokens(reference_table.STUDY_ID, f"Test_080720_1{i:04d}", 4)
    clock.set(reference_table.NOW)

    created = client.post("/v1/studies", headers=ADMIN, json=CREATE_REQUEST)
    tokens = client.post(
        f"/v1/studies/{reference_table.STUDY_ID}/tokens", headers=ADMIN,
        json={"subject_label": "Test_080720_09999", "n_codes": 4},
    )
    notify = client.post(
        f"/v1/studies/{reference_table.STUDY_ID}/notify", headers=ADMIN,
        json={"title": "Sync reminder", "body": "Please connect to Wi-Fi tonight.",
              "receiver": "ALL"},
    )
    errors = {
        "duration_zero": client.post(
            "/v1/studies", headers=ADMIN,
            json={**CREATE_REQUEST, "study_id": "x", "duration_days": 0},
        ).json(),
        "duplicate_study": client.post("/v1/studies", headers=ADMIN, json=CREATE_REQUEST).json(),
        "unknown_subject": client.post(
            f"/v1/studies/{reference_table.STUDY_ID}/notify", headers=ADMIN,
            json={"title": "t", "body": "b", "receiver": ["ghost"]},
        ).json(),
    }

    fixture = {
        "recorded_at": reference_table.NOW.isoformat(),
        "create_study": {"request": CREATE_REQUEST, "response": created.json()},
        "studies": client.get("/v1/studies", headers=ADMIN).json(),
        "overview": client.get(f"/v1/studies/{reference_table.STUDY_ID}/overview", headers=ADMIN).json(),
        "qc": client.get(
            f"/v1/studies/{reference_table.STUDY_ID}/qc", headers=ADMIN,
            params={"now": reference_table.NOW.isoformat()},
        ).json(),
        "tokens": tokens.json(),
        "notify": {
            "request": {"title": "Sync reminder", "body": "Please connect to Wi-Fi tonight.",
                        "receiver": "ALL"},
            "response": notify.json(),
        },
        "errors": errors,
    }

    out = Path(__file__).resolve().parents[1] / "fixtures" / "recorded_api.json"
    out.parent.mkdir(exist_ok=True)
    out.write_text(json.dumps(fixture, indent=2) + "\n")
    print(f"wrote {out} ({out.stat().st_size} bytes)")


if __name__ == "__main__":
    main()

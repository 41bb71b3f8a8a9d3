from datetime import datetime, timezone

import pytest

from fieldmon.registry import SensorSpec, StudyConfig
from fieldmon.server import ServerCore


class ManualClock:
    """Test clock: set explicitly, advance manually."""

    def __init__(self, start: datetime):
        self.now = start

    def __call__(self) -> datetime:
        return self.now

    def set(self, t: datetime) -> None:
        self.now = t

    def advance(self, seconds: float) -> None:
        from datetime import timedelta

        self.now = self.now + timedelta(seconds=seconds)


def utc(*args) -> datetime:
    return datetime(*args, tzinfo=timezone.utc)


@pytest.fixture
def clock():
    return ManualClock(utc(2020, 8, 1, 12, 0, 0))


@pytest.fixture
def core(tmp_path, clock):
    return ServerCore(tmp_path / "data", admin_key="test-admin", clock=clock)


def ppd_config(study_id="ppd_study") -> StudyConfig:
    """The 84-day, 60-subject study with location/activity/app-usage."""
    return StudyConfig(
        study_id=study_id,
        name="PPD",
        description="postpartum depression phone-usage study",
        duration_days=84,
        n_subjects=60,
        sensors=(
            SensorSpec("activity", 300.0),
            SensorSpec("application_usage", 86400.0),
            SensorSpec("location", 600.0),
        ),
    )

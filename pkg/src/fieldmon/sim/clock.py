"""Logical simulation clock: injected everywhere, never reads wall time."""

from datetime import datetime, timezone


class SimClock:
    def __init__(self, start_s: float):
        self.now_s = start_s

    def set_s(self, t_s: float) -> None:
        self.now_s = t_s

    def now_dt(self) -> datetime:
        return datetime.fromtimestamp(self.now_s, tz=timezone.utc)

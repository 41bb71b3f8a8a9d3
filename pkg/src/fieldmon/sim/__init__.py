"""Simulated smartphone fleet: device actors that enroll, generate
synthetic sensor data, anonymize location on-device, buffer locally, and
sync to a live server under connectivity/battery predicates, with crash
injection and deterministic replay."""

from .scenario import DeviceSpec, Scenario
from .fleet import FleetResult, run_fleet

__all__ = ["DeviceSpec", "FleetResult", "Scenario", "run_fleet"]

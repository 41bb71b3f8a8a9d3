"""fieldmon: remote-monitoring telemetry platform.

Study management and data ingestion server with a content-addressed
versioned datastore, a quality-control engine, and a simulated smartphone
fleet exercising the full client protocol (enrollment, location
anonymization, buffered checksummed sync, crash recovery).
"""

__version__ = "0.1.0"

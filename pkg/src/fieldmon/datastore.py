"""Content-addressed, versioned, append-only store; one dataset per study.

On-disk layout per study:

    data/{study_id}/objects/{aa}/{rest-of-sha256}   object bytes
    data/{study_id}/log                             commit records

Commit record encoding (bit-exact, UTF-8):

    {body_size} {commit_id}\n
    parent {parent_id or -}\n
    time {ISO-8601 UTC, microseconds}\n
    message {single-line message}\n
    add {logical_path} {object_id}\n        (one line per added entry)

``commit_id`` is the SHA-256 of the body (everything after the first
line). The parent id chains commits, so each id commits transitively to
the whole manifest while records stay append-only and O(delta) in size;
the full manifest of any commit is reproducible by replaying the chain.
"""

import hashlib
import os
import re
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterator, Optional

from .errors import AlreadyInitialized, EmptyObject, PathCollision, UnknownObject, UnknownStudy

_HEADER_RE = re.compile(rb"^(\d+) ([0-9a-f]{64})\n$")


@dataclass(frozen=True)
class Commit:
    commit_id: str
    parent_id: Optional[str]
    timestamp: datetime
    message: str
    added: tuple[tuple[str, str], ...]  # (logical_path, object_id) in this commit

    def to_doc(self) -> dict:
        return {
            "commit_id": self.commit_id,
            "parent_id": self.parent_id,
            "timestamp": self.timestamp.isoformat(),
            "message": self.message,
            "added": [list(e) for e in self.added],
        }


def encode_commit_body(parent_id: Optional[str], timestamp: datetime, message: str,
                       added: tuple[tuple[str, str], ...]) -> bytes:
    if "\n" in message:
        raise ValueError("commit message must be single-line")
    if any("\n" in path or "\n" in oid for path, oid in added):
        raise ValueError("manifest entries must be single-line")
    lines = [
        f"parent {parent_id or '-'}",
        f"time {timestamp.astimezone(timezone.utc).isoformat(timespec='microseconds')}",
        f"message {message}",
    ]
    for path, oid in added:
        lines.append(f"add {path} {oid}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def commit_id_of(body: bytes) -> str:
    return hashlib.sha256(body).hexdigest()


@dataclass
class FsckReport:
    corrupt_objects: list[str]
    corrupt_commits: list[str]

    @property
    def clean(self) -> bool:
        return not self.corrupt_objects and not self.corrupt_commits

    def to_doc(self) -> dict:
        return {
            "clean": self.clean,
            "corrupt_objects": self.corrupt_objects,
            "corrupt_commits": self.corrupt_commits,
        }


class DataStore:
    """All studies' datasets under one root directory."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._commit_locks: dict[str, threading.Lock] = {}
        self._manifests: dict[str, dict[str, str]] = {}  # study -> path -> oid
        self._heads: dict[str, str] = {}
        self._objects: dict[str, set[str]] = {}  # in-memory oid index per study
        self._shards: set[tuple[str, str]] = set()  # shard dirs known to exist
        self._log_handles: dict[str, object] = {}
        self._guard = threading.Lock()
        for study_dir in sorted(self.root.iterdir()):
            if (study_dir / "log").exists():
                self._load(study_dir.name)

    # -- layout helpers -----------------------------------------------------

    def _study_dir(self, study_id: str) -> Path:
        return self.root / study_id

    def _object_path(self, study_id: str, oid: str) -> Path:
        return self._study_dir(study_id) / "objects" / oid[:2] / oid[2:]

    def _log_path(self, study_id: str) -> Path:
        return self._study_dir(study_id) / "log"

    def _lock_for(self, study_id: str) -> threading.Lock:
        with self._guard:
            return self._commit_locks.setdefault(study_id, threading.Lock())

    def _load(self, study_id: str) -> None:
        manifest: dict[str, str] = {}
        head = None
        for commit in self.read_log(study_id):
            manifest.update(dict(commit.added))
            head = commit.commit_id
        self._manifests[study_id] = manifest
        if head:
            self._heads[study_id] = head
        self._objects[study_id] = self._scan_objects(study_id)

    def _scan_objects(self, study_id: str) -> set[str]:
        objects_dir = self._study_dir(study_id) / "objects"
        out = set()
        if objects_dir.exists():
            for shard in objects_dir.iterdir():
                for f in shard.iterdir():
                    if ".tmp" not in f.name:
                        out.add(shard.name + f.name)
        return out

    # -- dataset lifecycle ----------------------------------------------------

    def init_dataset(self, study_id: str, now: Optional[datetime] = None) -> Commit:
        if self.is_initialized(study_id):
            raise AlreadyInitialized(study_id)
        (self._study_dir(study_id) / "objects").mkdir(parents=True, exist_ok=True)
        self._manifests[study_id] = {}
        self._objects[study_id] = set()
        now = now or datetime.now(timezone.utc)
        return self._append_commit(study_id, now, "init dataset", ())

    def is_initialized(self, study_id: str) -> bool:
        return study_id in self._manifests or self._log_path(study_id).exists()

    def _require_dataset(self, study_id: str) -> None:
        if not self.is_initialized(study_id):
            raise UnknownStudy(f"no dataset for {study_id}")

    # -- objects ---------------------------------------------------------------

    def put_object(self, study_id: str, data: bytes) -> str:
        """Store bytes under their content address; idempotent."""
        self._require_dataset(study_id)
        if not data:
            raise EmptyObject("refusing zero-length object")
        oid = hashlib.sha256(data).hexdigest()
        known = self._objects[study_id]
        if oid not in known:
            path = self._object_path(study_id, oid)
            shard = (study_id, oid[:2])
            if shard not in self._shards:
                path.parent.mkdir(parents=True, exist_ok=True)
                with self._guard:
                    self._shards.add(shard)
            tmp = path.with_name(path.name + f".tmp{os.getpid()}.{threading.get_ident()}")
            tmp.write_bytes(data)
            os.replace(tmp, path)  # atomic publish; concurrent puts converge
            with self._guard:
                known.add(oid)
        return oid

    def get_object(self, study_id: str, oid: str) -> bytes:
        path = self._object_path(study_id, oid)
        if not path.exists():
            raise UnknownObject(oid)
        return path.read_bytes()

    def has_object(self, study_id: str, oid: str) -> bool:
        return oid in self._objects.get(study_id, ()) or self._object_path(study_id, oid).exists()

    def object_ids(self, study_id: str) -> set[str]:
        return self._scan_objects(study_id)

    # -- commits -----------------------------------------------------------------

    def commit_batch(self, study_id: str, logical_path: str, oid: str, message: str,
                     now: Optional[datetime] = None) -> Commit:
        self._require_dataset(study_id)
        if not self.has_object(study_id, oid):
            raise UnknownObject(oid)
        now = now or datetime.now(timezone.utc)
        with self._lock_for(study_id):
            if logical_path in self._manifests[study_id]:
                raise PathCollision(logical_path)
            return self._append_commit(study_id, now, message, ((logical_path, oid),))

    def _append_commit(self, study_id: str, now: datetime, message: str,
                       added: tuple[tuple[str, str], ...]) -> Commit:
        parent = self._heads.get(study_id)
        body = encode_commit_body(parent, now, message, added)
        cid = commit_id_of(body)
        header = f"{len(body)} {cid}\n".encode("utf-8")
        fh = self._log_handles.get(study_id)
        if fh is None:
            fh = open(self._log_path(study_id), "ab")
            self._log_handles[study_id] = fh
        fh.write(header + body)
        fh.flush()
        self._heads[study_id] = cid
        self._manifests[study_id].update(dict(added))
        return Commit(
            commit_id=cid,
            parent_id=parent,
            timestamp=now.astimezone(timezone.utc),
            message=message,
            added=added,
        )

    def head(self, study_id: str) -> Optional[str]:
        return self._heads.get(study_id)

    def manifest(self, study_id: str) -> list[tuple[str, str]]:
        """Current manifest: sorted (logical_path, object_id) pairs."""
        self._require_dataset(study_id)
        return sorted(self._manifests[study_id].items())

    def read_log(self, study_id: str) -> Iterator[Commit]:
        """Parse the commit log; raises on structural corruption."""
        self._require_dataset(study_id)
        with open(self._log_path(study_id), "rb") as fh:
            while True:
                header = fh.readline()
                if not header:
                    return
                m = _HEADER_RE.match(header)
                if not m:
                    raise ValueError(f"malformed commit header: {header!r}")
                size, cid = int(m.group(1)), m.group(2).decode()
                body = fh.read(size)
                if len(body) != size:
                    raise ValueError(f"truncated commit {cid}")
                yield _parse_commit(cid, body)

    def history(self, study_id: str) -> list[Commit]:
        return list(self.read_log(study_id))

    def close(self) -> None:
        with self._guard:
            for fh in self._log_handles.values():
                fh.close()
            self._log_handles.clear()

    # -- integrity ------------------------------------------------------------------

    def fsck(self, study_id: str) -> FsckReport:
        """Re-hash every object and commit; corruption is reported, not raised."""
        self._require_dataset(study_id)
        bad_objects = []
        objects_dir = self._study_dir(study_id) / "objects"
        if objects_dir.exists():
            for shard in sorted(objects_dir.iterdir()):
                for f in sorted(shard.iterdir()):
                    oid = shard.name + f.name
                    if hashlib.sha256(f.read_bytes()).hexdigest() != oid:
                        bad_objects.append(oid)

        bad_commits = []
        expected_parent = None
        with open(self._log_path(study_id), "rb") as fh:
            while True:
                header = fh.readline()
                if not header:
                    break
                m = _HEADER_RE.match(header)
                if not m:
                    bad_commits.append(f"unparseable-record-at-{fh.tell()}")
                    break
                size, cid = int(m.group(1)), m.group(2).decode()
                body = fh.read(size)
                if len(body) != size or commit_id_of(body) != cid:
                    bad_commits.append(cid)
                    break  # chain is broken from here on
                try:
                    commit = _parse_commit(cid, body)
                except ValueError:
                    bad_commits.append(cid)
                    break
                if commit.parent_id != expected_parent:
                    bad_commits.append(cid)
                    break
                expected_parent = cid
        return FsckReport(corrupt_objects=bad_objects, corrupt_commits=bad_commits)

    # -- replay ----------------------------------------------------------------------

    def replay_into(self, study_id: str, target: "DataStore") -> None:
        """Reproduce this study's dataset in a fresh store from the commit
        log plus object bytes; ids must come out identical."""
        for commit in self.read_log(study_id):
            if not target.is_initialized(study_id):
                target.init_dataset(study_id, now=commit.timestamp)
                continue
            for path, oid in commit.added:
                target.put_object(study_id, self.get_object(study_id, oid))
                target.commit_batch(study_id, path, oid, commit.message, now=commit.timestamp)


def _parse_commit(cid: str, body: bytes) -> Commit:
    lines = body.decode("utf-8").split("\n")
    if lines[-1] != "":
        raise ValueError(f"commit {cid}: missing trailing newline")
    lines = lines[:-1]
    if len(lines) < 3:
        raise ValueError(f"commit {cid}: too few fields")
    parent = lines[0].removeprefix("parent ")
    time_s = lines[1].removeprefix("time ")
    message = lines[2].removeprefix("message ")
    if lines[0] == parent or lines[1] == time_s or lines[2] == message:
        raise ValueError(f"commit {cid}: bad field labels")
    added = []
    for ln in lines[3:]:
        if not ln.startswith("add "):
            raise ValueError(f"commit {cid}: bad entry line")
        path, _, oid = ln[4:].rpartition(" ")
        added.append((path, oid))
    return Commit(
        commit_id=cid,
        parent_id=None if parent == "-" else parent,
        timestamp=datetime.fromisoformat(time_s),
        message=message,
        added=tuple(added),
    )

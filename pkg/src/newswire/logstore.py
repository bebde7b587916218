"""File-backed append-only logs with per-group consumer offsets.

Each log is a directory of JSONL segment files named by their first
offset. Records are immutable once appended; consumers track their own
position and re-read from the last committed offset after a restart,
which gives at-least-once delivery. Downstream effects must therefore
be idempotent (the cluster worker dedupes by tweet id).
"""

from __future__ import annotations

import json
import os
import threading
from bisect import bisect_right
from pathlib import Path
from typing import Iterator, Optional

LOG_VERSION = 1


class TopicLog:
    def __init__(self, name: str, root: str | Path, segment_records: int = 2000,
                 retain_segments: Optional[int] = None):
        self.name = name
        self.dir = Path(root) / name
        self.dir.mkdir(parents=True, exist_ok=True)
        self.segment_records = segment_records
        self.retain_segments = retain_segments
        self._lock = threading.RLock()
        self._seg_cache: dict[int, list[dict]] = {}
        self._scan()

    # ------------------------------------------------------------ layout

    def _seg_path(self, start: int) -> Path:
        return self.dir / f"{start:010d}.jsonl"

    def _scan(self) -> None:
        self._segments: list[int] = sorted(
            int(p.stem) for p in self.dir.glob("*.jsonl"))
        if self._segments:
            last = self._segments[-1]
            path = self._seg_path(last)
            # a hard kill can tear the final line; drop it rather than
            # poisoning every later read of the segment
            keep: list[str] = []
            torn = False
            with open(path) as fh:
                for line in fh:
                    try:
                        json.loads(line)
                    except ValueError:
                        torn = True
                        break
                    keep.append(line)
            if torn:
                path.write_text("".join(keep))
            self._end = last + len(keep)
        else:
            self._end = 0
        meta = self.dir / "consumers.json"
        self._consumers: dict[str, int] = (
            json.loads(meta.read_text()) if meta.exists() else {})
        self._append_fh = None

    # ------------------------------------------------------------ append

    @property
    def end_offset(self) -> int:
        with self._lock:
            return self._end

    @property
    def start_offset(self) -> int:
        # first readable offset; above zero once retention retires segments
        with self._lock:
            return self._segments[0] if self._segments else 0

    def append(self, record: dict) -> int:
        with self._lock:
            offset = self._end
            seg_start = self._segments[-1] if self._segments else 0
            if not self._segments or offset - seg_start >= self.segment_records:
                seg_start = offset
                self._segments.append(seg_start)
                if self._append_fh:
                    self._append_fh.close()
                self._append_fh = open(self._seg_path(seg_start), "a")
                self._retire()
            if self._append_fh is None:
                self._append_fh = open(self._seg_path(seg_start), "a")
            line = json.dumps(record, sort_keys=True)
            self._append_fh.write(line + "\n")
            self._append_fh.flush()
            # write-through so tailing the hot segment never re-parses it;
            # the reparse keeps callers from aliasing the cached object
            cached = self._seg_cache.get(seg_start)
            if cached is not None:
                cached.append(json.loads(line))
            elif offset == seg_start:
                self._seg_cache[seg_start] = [json.loads(line)]
            self._end = offset + 1
            return offset

    def _retire(self) -> None:
        # retention bounds disk and cache; readers below the horizon error
        if self.retain_segments is None:
            return
        while len(self._segments) > self.retain_segments:
            dead = self._segments.pop(0)
            self._seg_cache.pop(dead, None)
            self._seg_path(dead).unlink(missing_ok=True)

    # -------------------------------------------------------------- read

    def _segment_records_at(self, start: int) -> list[dict]:
        cached = self._seg_cache.get(start)
        if cached is not None:
            return cached
        with open(self._seg_path(start)) as fh:
            records = [json.loads(line) for line in fh]
        if len(self._seg_cache) > 8:
            self._seg_cache.clear()
        self._seg_cache[start] = records
        return records

    def read_from(self, offset: int, limit: int = 500) -> list[tuple[int, dict]]:
        with self._lock:
            if offset >= self._end:
                return []
            if not self._segments or offset < self._segments[0]:
                raise KeyError(f"offset {offset} below retention horizon")
            out: list[tuple[int, dict]] = []
            i = bisect_right(self._segments, offset) - 1
            while i < len(self._segments) and len(out) < limit:
                start = self._segments[i]
                records = self._segment_records_at(start)
                for j, rec in enumerate(records):
                    off = start + j
                    if off < offset:
                        continue
                    out.append((off, rec))
                    if len(out) >= limit:
                        break
                i += 1
            return out

    def iter_all(self) -> Iterator[tuple[int, dict]]:
        offset = self._segments[0] if self._segments else 0
        while True:
            batch = self.read_from(offset, 1000)
            if not batch:
                return
            yield from batch
            offset = batch[-1][0] + 1

    # --------------------------------------------------------- consumers

    def committed(self, group: str) -> int:
        with self._lock:
            return self._consumers.get(group, self._segments[0] if self._segments else 0)

    def commit(self, group: str, next_offset: int) -> None:
        with self._lock:
            self._consumers[group] = next_offset
            tmp = self.dir / "consumers.json.tmp"
            tmp.write_text(json.dumps(self._consumers, sort_keys=True))
            os.replace(tmp, self.dir / "consumers.json")

    def poll(self, group: str, limit: int = 500) -> list[tuple[int, dict]]:
        """Records from the group's committed position onward. The caller
        commits after its effects are durable."""
        return self.read_from(self.committed(group), limit)

    def lag(self, group: str) -> int:
        with self._lock:
            return self._end - self.committed(group)

    def close(self) -> None:
        with self._lock:
            if self._append_fh:
                self._append_fh.close()
                self._append_fh = None


def open_log_root(root: str | Path) -> dict[str, TopicLog]:
    """Reopen every log directory under root (restart path)."""
    root = Path(root)
    out = {}
    if root.exists():
        for child in sorted(root.iterdir()):
            if child.is_dir():
                out[child.name] = TopicLog(child.name, root)
    return out

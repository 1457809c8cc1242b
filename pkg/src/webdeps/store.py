"""Append-friendly snapshot persistence.

One directory per snapshot under the store root:

    <root>/<snapshot_id>/meta.json        id, created, config digest
    <root>/<snapshot_id>/probes.jsonl     one ProbeResult per line
    <root>/<snapshot_id>/reports.jsonl    one SiteDependencyReport per line
    <root>/<snapshot_id>/aux_facts.jsonl  ServiceHostFacts for indirect deps

Probe results are appended as they complete (resumable after a crash)
and compacted into (country, rank) order once a run finishes. Report and
aux files are always rewritten whole, sorted, with canonical JSON, so
reruns produce identical bytes.
"""

from __future__ import annotations

import json
import re
import threading
from datetime import datetime, timezone
from pathlib import Path

from .classify import SiteDependencyReport
from .errors import SnapshotNotFound, StoreError, StoreWriteFailed
from .probe import ProbeResult, ServiceHostFacts

_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


class SnapshotStore:
    def __init__(self, root):
        self.root = Path(root)
        self._lock = threading.Lock()

    def _dir(self, snapshot_id: str, must_exist: bool = True) -> Path:
        if not _ID_RE.match(snapshot_id):
            raise StoreError(f"bad snapshot id: {snapshot_id!r}")
        d = self.root / snapshot_id
        if must_exist and not d.is_dir():
            raise SnapshotNotFound(snapshot_id)
        return d

    def exists(self, snapshot_id: str) -> bool:
        return (self.root / snapshot_id / "meta.json").exists()

    def create(self, snapshot_id: str, config_digest: str) -> dict:
        """Create the snapshot directory, or return existing meta when the
        snapshot is already there (resume)."""
        d = self._dir(snapshot_id, must_exist=False)
        meta_path = d / "meta.json"
        if meta_path.exists():
            return self.meta(snapshot_id)
        try:
            d.mkdir(parents=True, exist_ok=True)
            meta = {"snapshot_id": snapshot_id,
                    "created": datetime.now(timezone.utc).isoformat(),
                    "config_digest": config_digest}
            meta_path.write_text(_dumps(meta) + "\n", encoding="utf-8")
        except OSError as exc:
            raise StoreWriteFailed(f"{snapshot_id}: {exc}")
        return meta

    def meta(self, snapshot_id: str) -> dict:
        d = self._dir(snapshot_id)
        try:
            return json.loads((d / "meta.json").read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise SnapshotNotFound(f"{snapshot_id}: {exc}")

    # -- probes ----------------------------------------------------------------

    def append_probe(self, snapshot_id: str, result: ProbeResult):
        d = self._dir(snapshot_id)
        line = _dumps(result.to_dict())
        try:
            with self._lock, (d / "probes.jsonl").open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
        except OSError as exc:
            raise StoreWriteFailed(f"{snapshot_id}: {exc}")

    def load_probes(self, snapshot_id: str) -> list:
        d = self._dir(snapshot_id)
        path = d / "probes.jsonl"
        if not path.exists():
            return []
        out = []
        for line in path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                out.append(ProbeResult.from_dict(json.loads(line)))
        out.sort(key=lambda r: (r.site.country, r.site.rank, r.site.domain))
        return out

    def compact_probes(self, snapshot_id: str):
        """Rewrite probes.jsonl in (country, rank) order, dropping
        duplicate sites (last write wins)."""
        results = self.load_probes(snapshot_id)
        by_site = {}
        for r in results:
            by_site[(r.site.country, r.site.domain)] = r
        ordered = sorted(by_site.values(),
                         key=lambda r: (r.site.country, r.site.rank, r.site.domain))
        self._rewrite(snapshot_id, "probes.jsonl", (r.to_dict() for r in ordered))

    # -- reports and aux facts ---------------------------------------------------

    def write_reports(self, snapshot_id: str, reports):
        ordered = sorted(reports, key=lambda r: (r.site.country, r.site.rank, r.site.domain))
        self._rewrite(snapshot_id, "reports.jsonl", (r.to_dict() for r in ordered))

    def load_reports(self, snapshot_id: str) -> list:
        d = self._dir(snapshot_id)
        path = d / "reports.jsonl"
        if not path.exists():
            return []
        return [SiteDependencyReport.from_dict(json.loads(line))
                for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]

    def write_aux_facts(self, snapshot_id: str, facts: dict):
        ordered = (facts[h].to_dict() for h in sorted(facts))
        self._rewrite(snapshot_id, "aux_facts.jsonl", ordered)

    def load_aux_facts(self, snapshot_id: str) -> dict:
        d = self._dir(snapshot_id)
        path = d / "aux_facts.jsonl"
        if not path.exists():
            return {}
        out = {}
        for line in path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                facts = ServiceHostFacts.from_dict(json.loads(line))
                out[facts.hostname] = facts
        return out

    def _rewrite(self, snapshot_id: str, filename: str, dicts):
        d = self._dir(snapshot_id)
        tmp = d / (filename + ".tmp")
        try:
            with tmp.open("w", encoding="utf-8") as fh:
                for obj in dicts:
                    fh.write(_dumps(obj) + "\n")
            tmp.replace(d / filename)
        except OSError as exc:
            raise StoreWriteFailed(f"{snapshot_id}/{filename}: {exc}")

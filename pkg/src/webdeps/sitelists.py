"""Ranked site-list ingestion.

Two formats:
  csv    rows of `rank,domain,country` (header row optional)
  lines  one domain per line, rank = line position, country from the
         file name stem ("US.txt" -> US)

Records are validated, deduplicated per (country, domain) keeping the
best rank, and returned in (country, rank) order.
"""

from __future__ import annotations

import csv
from pathlib import Path

from .errors import DuplicateRank, MalformedHostname, MalformedRow
from .probe import SiteRecord

FORMATS = ("csv", "lines")


def _make_record(path, line_no, rank_text, domain, country) -> SiteRecord:
    try:
        rank = int(rank_text)
    except (TypeError, ValueError):
        raise MalformedRow(path, line_no, f"bad rank {rank_text!r}")
    if rank < 1:
        raise MalformedRow(path, line_no, f"rank must be >= 1, got {rank}")
    try:
        return SiteRecord(domain=domain, country=country, rank=rank)
    except (MalformedHostname, ValueError) as exc:
        raise MalformedRow(path, line_no, str(exc))


def _parse_csv(path) -> list:
    records = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for ln, row in enumerate(csv.reader(fh), 1):
            if not row or row[0].startswith("#"):
                continue
            if ln == 1 and [c.strip().lower() for c in row[:2]] == ["rank", "domain"]:
                continue
            if len(row) != 3:
                raise MalformedRow(path, ln, f"expected rank,domain,country; got {len(row)} columns")
            records.append(_make_record(path, ln, row[0].strip(), row[1].strip(), row[2].strip()))
    return records


def _parse_lines(path) -> list:
    country = Path(path).stem.upper()
    records = []
    rank = 0
    for ln, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        domain = raw.strip().lower()
        if not domain or domain.startswith("#"):
            continue
        rank += 1
        records.append(_make_record(path, ln, rank, domain, country))
    return records


def ingest_site_lists(paths, fmt: str = "csv") -> list:
    """Parse, validate and deduplicate ranked site lists."""
    if fmt not in FORMATS:
        raise MalformedRow(str(paths), 0, f"unknown format {fmt!r}")
    records = []
    for path in paths:
        records.extend(_parse_csv(path) if fmt == "csv" else _parse_lines(path))

    by_rank = {}
    for rec in records:
        key = (rec.country, rec.rank)
        if key in by_rank and by_rank[key].domain != rec.domain:
            raise DuplicateRank(f"{rec.country} rank {rec.rank}: "
                                f"{by_rank[key].domain} vs {rec.domain}")
        by_rank.setdefault(key, rec)

    best = {}
    for rec in sorted(by_rank.values(), key=lambda r: (r.country, r.rank)):
        best.setdefault((rec.country, rec.domain), rec)
    return sorted(best.values(), key=lambda r: (r.country, r.rank))


def ingest_stats(records) -> dict:
    """Total and per-country unique counts for reporting."""
    per_country = {}
    for rec in records:
        per_country[rec.country] = per_country.get(rec.country, 0) + 1
    return {"total_records": len(records),
            "unique_domains": len({r.domain for r in records}),
            "per_country": dict(sorted(per_country.items()))}

"""Command-line interface: ingest -> probe -> classify -> report/trends.

Exit codes: 0 success, 2 usage, 3 data error, 4 total network failure,
5 store error. Every failure prints one machine-parsable line to stderr:
`E_USAGE|E_DATA|E_NET|E_STORE: <message>`.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .classify import classify_site, compute_concentration
from .config import RunConfig
from .errors import (DataError, MissingPrerequisite, NetworkError,
                     SnapshotNotFound, StoreError, WebdepsError)
from .exports import (EXPORT_KINDS, aggregate_rows, centralization_rows,
                      correlation_rows, group_summary_rows, indirect_rows,
                      overlap_rows, site_report_rows, write_rows)
from .probe import CachedServiceProber, LiveServiceProber, probe_site
from .sitelists import FORMATS, ingest_site_lists, ingest_stats
from .store import SnapshotStore
from .trends import load_groups, load_indicators

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NETWORK = 4
EXIT_STORE = 5


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(f"E_USAGE: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _load_config(args) -> RunConfig:
    overrides = {}
    for key in ("parallelism", "offline", "har_dir", "concentration_threshold"):
        if hasattr(args, key) and getattr(args, key) is not None:
            overrides[key] = getattr(args, key)
    if args.config:
        return RunConfig.from_file(args.config, overrides)
    return RunConfig.defaults(overrides)


def run_probe(records, config: RunConfig, snapshot_id: str, store: SnapshotStore):
    """Probe every record under the parallelism bound; resumable."""
    if config.offline:
        if not store.exists(snapshot_id):
            raise DataError("offline mode needs an existing snapshot with probe results")
        return store.meta(snapshot_id)
    store.create(snapshot_id, config.digest())
    done = {(r.site.country, r.site.domain) for r in store.load_probes(snapshot_id)}
    todo = [r for r in records if (r.country, r.domain) not in done]
    ctx = config.probe_context()
    if todo:
        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            for result in pool.map(lambda rec: probe_site(rec, ctx), todo):
                store.append_probe(snapshot_id, result)
    store.compact_probes(snapshot_id)
    return store.meta(snapshot_id)


def run_classify(snapshot_id: str, config: RunConfig, store: SnapshotStore):
    """Corpus concentration once, then one report per probed site."""
    probes = store.load_probes(snapshot_id)
    if not probes:
        raise SnapshotNotFound(f"{snapshot_id}: no probe results")
    psl = config.load_psl()
    cdn_map = config.load_cdn_map()
    concentration = compute_concentration(
        {p.site.domain: p.dns for p in probes}, psl)
    reports = [classify_site(p, concentration, config.concentration_threshold,
                             cdn_map, psl) for p in probes]
    store.write_reports(snapshot_id, reports)
    return reports


def _reports_or_fail(store, snapshot_id):
    reports = store.load_reports(snapshot_id)
    if not reports:
        raise MissingPrerequisite("classify")
    return reports


def _indirect_prober(config: RunConfig, store: SnapshotStore, snapshot_id: str):
    cached = store.load_aux_facts(snapshot_id)
    if config.offline:
        return CachedServiceProber(cached), None
    live = LiveServiceProber(config.probe_context(), seed=cached)
    return live, live


def cmd_ingest(args):
    config = _load_config(args)
    paths = args.lists or ([str(p) for p in sorted(Path(config.site_lists).parent.glob(
        Path(config.site_lists).name))] if config.site_lists else [])
    if not paths:
        raise DataError("no site lists given (positional paths or site_lists config key)")
    records = ingest_site_lists(paths, args.format or config.site_list_format)
    stats = ingest_stats(records)
    out = Path(args.out or "sites.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8") as fh:
        fh.write("rank,domain,country\n")
        for rec in records:
            fh.write(f"{rec.rank},{rec.domain},{rec.country}\n")
    print(f"ingested {stats['total_records']} records, "
          f"{stats['unique_domains']} unique domains -> {out}")
    for country, count in stats["per_country"].items():
        print(f"  {country}: {count}")
    return 0


def cmd_probe(args):
    config = _load_config(args)
    store = SnapshotStore(config.store)
    sites_file = args.sites or config.site_lists
    if not sites_file and not config.offline:
        raise DataError("probe needs --sites (canonical csv from `webdeps ingest`)")
    records = ingest_site_lists([sites_file], "csv") if sites_file else []
    meta = run_probe(records, config, args.snapshot, store)
    probed = len(store.load_probes(args.snapshot))
    print(f"snapshot {meta['snapshot_id']}: {probed} probe results")
    return 0


def cmd_classify(args):
    config = _load_config(args)
    store = SnapshotStore(config.store)
    reports = run_classify(args.snapshot, config, store)
    print(f"snapshot {args.snapshot}: {len(reports)} site reports")
    return 0


def cmd_report(args):
    config = _load_config(args)
    store = SnapshotStore(config.store)
    what = args.what
    fmt = args.format
    out = Path(args.out or f"{args.snapshot}_{what}.{fmt}")

    if what == "overlap":
        if not (config.rankings_dir and config.global_list):
            raise MissingPrerequisite("rankings_dir and global_list config keys")
        rows, columns = overlap_rows(config.rankings_dir, config.global_list)
    else:
        reports = _reports_or_fail(store, args.snapshot)
        if what == "site-reports":
            rows, columns = site_report_rows(reports)
        elif what == "country-aggregates":
            rows, columns = aggregate_rows(reports)
        elif what == "centralization":
            rows, columns = centralization_rows(reports, k=args.top_k,
                                                aliases=config.load_aliases())
        elif what == "indirect":
            prober, live = _indirect_prober(config, store, args.snapshot)
            rows, columns = indirect_rows(reports, prober, config.load_cdn_map(),
                                          config.load_psl())
            if live is not None:
                store.write_aux_facts(args.snapshot, live.cache)
        elif what == "correlations":
            if not config.indicators:
                raise MissingPrerequisite("indicators config key")
            rows, columns = correlation_rows(
                reports, load_indicators(config.indicators),
                load_groups(config.groups) if config.groups else {})
        elif what == "group-summaries":
            if not config.groups:
                raise MissingPrerequisite("groups config key")
            rows, columns = group_summary_rows(reports, load_groups(config.groups))
        else:
            raise DataError(f"unknown report: {what}")
    path = write_rows(rows, columns, fmt, out)
    print(f"wrote {len(rows)} rows -> {path}")
    return 0


def cmd_trends(args):
    """Convenience: export overlap, correlations and group-summaries."""
    config = _load_config(args)
    store = SnapshotStore(config.store)
    out_dir = Path(args.out or "trends")
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if config.rankings_dir and config.global_list:
        rows, columns = overlap_rows(config.rankings_dir, config.global_list)
        written.append(write_rows(rows, columns, args.format,
                                  out_dir / f"overlap.{args.format}"))
    reports = _reports_or_fail(store, args.snapshot)
    groups = load_groups(config.groups) if config.groups else {}
    if config.indicators:
        rows, columns = correlation_rows(reports, load_indicators(config.indicators), groups)
        written.append(write_rows(rows, columns, args.format,
                                  out_dir / f"correlations.{args.format}"))
    if groups:
        rows, columns = group_summary_rows(reports, groups)
        written.append(write_rows(rows, columns, args.format,
                                  out_dir / f"group_summaries.{args.format}"))
    if not written:
        raise MissingPrerequisite("rankings_dir/global_list, indicators or groups config keys")
    for path in written:
        print(f"wrote {path}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="webdeps",
                     description="Classify third-party DNS/CA/CDN dependencies "
                                 "of ranked websites and compute per-country statistics.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, snapshot_required=True):
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--snapshot", required=snapshot_required,
                       help="snapshot id in the store")
        p.add_argument("--out", help="output path")

    p = sub.add_parser("ingest", help="validate and canonicalize ranked site lists")
    p.add_argument("lists", nargs="*", help="site list files")
    p.add_argument("--format", choices=FORMATS, help="input format (default csv)")
    common(p, snapshot_required=False)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("probe", help="collect network facts for every site")
    p.add_argument("--sites", help="canonical rank,domain,country csv")
    p.add_argument("--parallelism", type=int)
    p.add_argument("--offline", action="store_const", const=True, default=None)
    p.add_argument("--har-dir", dest="har_dir")
    common(p)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("classify", help="classify every probed site")
    p.add_argument("--concentration-threshold", dest="concentration_threshold", type=int)
    common(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("report", help="export reports and statistics")
    p.add_argument("--what", choices=EXPORT_KINDS, required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--top-k", dest="top_k", type=int, default=3)
    p.add_argument("--offline", action="store_const", const=True, default=None)
    common(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("trends", help="export overlap, correlation and group summaries")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    common(p)
    p.set_defaults(func=cmd_trends)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NetworkError as exc:
        print(f"E_NET: {exc}", file=sys.stderr)
        return EXIT_NETWORK
    except StoreError as exc:
        print(f"E_STORE: {exc}", file=sys.stderr)
        return EXIT_STORE
    except (DataError, WebdepsError) as exc:
        print(f"E_DATA: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

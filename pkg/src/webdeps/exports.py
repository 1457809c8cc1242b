"""Deterministic CSV/JSON export of reports and statistics.

Every export builds a list of row dicts first and renders the same rows
to either format, so parsed CSV and JSON are value-equal. Percentages
are rounded to one decimal; ordering is (country, rank) then
lexicographic everywhere.
"""

from __future__ import annotations

import csv
import json
from fractions import Fraction
from pathlib import Path

from .classify import ServiceKind
from .errors import DataError, MissingPrerequisite
from .metrics import aggregate_country, indirect_dependencies
from .providers import display_name
from .trends import (correlate, group_summary, load_ranked_list,
                     overlap_class, overlap_fraction)

EXPORT_KINDS = ("site-reports", "country-aggregates", "centralization",
                "indirect", "overlap", "correlations", "group-summaries")

OVERLAP_SUBSETS = (1000, 5000, 10000, 20000, 50000, 100000)

AGGREGATE_COLUMNS = [
    "country", "n_sites",
    "dns_third_pct", "dns_critical_pct", "dns_unknown_pct",
    "dns_redundant_pct", "dns_multi_third_pct", "dns_mixed_pct",
    "ca_third_pct", "ca_critical_pct", "ca_unknown_pct",
    "cdn_third_pct", "cdn_critical_pct", "cdn_unknown_pct",
    "cdn_redundant_pct", "cdn_multi_third_pct", "cdn_mixed_pct",
    "https_pct", "ocsp_pct", "mean_third_pct",
]


def pct(fraction) -> float:
    """Fraction in [0,1] -> percentage with one decimal."""
    return round(float(Fraction(fraction) * 100), 1)


def write_rows(rows, columns, fmt: str, out_path):
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        with out_path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({c: ("" if row.get(c) is None else row.get(c))
                                 for c in columns})
    elif fmt == "json":
        with out_path.open("w", encoding="utf-8") as fh:
            json.dump([{c: row.get(c) for c in columns} for row in rows],
                      fh, indent=2, sort_keys=False, ensure_ascii=False)
            fh.write("\n")
    else:
        raise DataError(f"unknown export format {fmt!r}")
    return out_path


def reports_by_country(reports) -> dict:
    out = {}
    for r in reports:
        out.setdefault(r.site.country, []).append(r)
    return {c: sorted(v, key=lambda r: (r.site.rank, r.site.domain))
            for c, v in sorted(out.items())}


# -- row builders -------------------------------------------------------------

def site_report_rows(reports):
    columns = ["country", "rank", "domain", "https", "ocsp_stapled",
               "dns_verdicts", "dns_providers", "ca_host", "ca_verdict",
               "cdns", "cdn_verdicts", "n_internal_resources"]
    rows = []
    for r in sorted(reports, key=lambda r: (r.site.country, r.site.rank, r.site.domain)):
        rows.append({
            "country": r.site.country, "rank": r.site.rank, "domain": r.site.domain,
            "https": int(r.https_supported), "ocsp_stapled": int(r.ocsp_stapled),
            "dns_verdicts": "|".join(f"{c.service_host}={c.verdict.value}" for c in r.dns),
            "dns_providers": "|".join(sorted({c.provider for c in r.dns if c.provider})),
            "ca_host": r.ca.service_host if r.ca else "",
            "ca_verdict": r.ca.verdict.value if r.ca else "",
            "cdns": "|".join(c.cdn_name for c in r.cdns),
            "cdn_verdicts": "|".join(f"{c.cdn_name}={c.verdict.value}" for c in r.cdns),
            "n_internal_resources": len(r.internal_resources),
        })
    return rows, columns


def aggregate_rows(reports):
    rows = []
    for country, items in reports_by_country(reports).items():
        agg = aggregate_country(country, items)
        k = agg.kinds
        rows.append({
            "country": country, "n_sites": agg.n_sites,
            "dns_third_pct": pct(k[ServiceKind.DNS].third_party_rate),
            "dns_critical_pct": pct(k[ServiceKind.DNS].critical_rate),
            "dns_unknown_pct": pct(k[ServiceKind.DNS].unknown_rate),
            "dns_redundant_pct": pct(agg.dns_redundant_rate),
            "dns_multi_third_pct": pct(agg.dns_multi_third_rate),
            "dns_mixed_pct": pct(agg.dns_mixed_rate),
            "ca_third_pct": pct(k[ServiceKind.CA].third_party_rate),
            "ca_critical_pct": pct(k[ServiceKind.CA].critical_rate),
            "ca_unknown_pct": pct(k[ServiceKind.CA].unknown_rate),
            "cdn_third_pct": pct(k[ServiceKind.CDN].third_party_rate),
            "cdn_critical_pct": pct(k[ServiceKind.CDN].critical_rate),
            "cdn_unknown_pct": pct(k[ServiceKind.CDN].unknown_rate),
            "cdn_redundant_pct": pct(agg.cdn_redundant_rate),
            "cdn_multi_third_pct": pct(agg.cdn_multi_third_rate),
            "cdn_mixed_pct": pct(agg.cdn_mixed_rate),
            "https_pct": pct(agg.https_rate),
            "ocsp_pct": pct(agg.ocsp_rate),
            "mean_third_pct": pct(agg.mean_third_party_rate()),
        })
    return rows, AGGREGATE_COLUMNS


def centralization_rows(reports, k: int = 3, aliases: dict = None):
    aliases = aliases or {}
    columns = ["country", "kind", "coverage_pct"] + [f"provider_{i}" for i in range(1, k + 1)]
    rows = []
    for country, items in reports_by_country(reports).items():
        agg = aggregate_country(country, items, top_ks=(k,))
        for kind in ServiceKind:
            stats = agg.kinds[kind]
            coverage = stats.top_k_coverage.get(k)
            row = {"country": country, "kind": kind.value,
                   "coverage_pct": pct(coverage) if coverage is not None else None}
            ranked = stats.top_providers[:k]
            for i in range(k):
                name = display_name(ranked[i][0], aliases) if i < len(ranked) else None
                row[f"provider_{i + 1}"] = name
            rows.append(row)
    return rows, columns


def indirect_rows(reports, prober, cdn_map, psl):
    columns = ["country", "leg", "n_providers", "third_party_pct", "newly_dependent_sites"]
    rows = []
    for country, items in reports_by_country(reports).items():
        rep = indirect_dependencies(country, items, prober, cdn_map, psl)
        for leg_name, leg in (("cdn_to_dns", rep.cdn_to_dns),
                              ("ca_to_dns", rep.ca_to_dns),
                              ("ca_to_cdn", rep.ca_to_cdn)):
            rows.append({
                "country": country, "leg": leg_name,
                "n_providers": leg.n_providers,
                "third_party_pct": (pct(leg.third_party_fraction)
                                    if leg.third_party_fraction is not None else None),
                "newly_dependent_sites": leg.newly_dependent_sites,
            })
    return rows, columns


def overlap_rows(rankings_dir, global_list_path, subsets=OVERLAP_SUBSETS):
    global_list = load_ranked_list(global_list_path, "global")
    regionals = {}
    for path in sorted(Path(rankings_dir).glob("*.txt")):
        label = path.stem.upper()
        if label == "GLOBAL" or Path(global_list_path).resolve() == path.resolve():
            continue
        regionals[label] = load_ranked_list(path, label)
    if not regionals:
        raise DataError(f"no regional ranking files (*.txt) in {rankings_dir}")
    columns = ["country"] + [f"overlap_top{n}_pct" for n in subsets] + ["overlap_class"]
    full = {}
    rows = []
    for country, regional in sorted(regionals.items()):
        row = {"country": country}
        for n in subsets:
            frac = overlap_fraction(regional, global_list.head(n))
            row[f"overlap_top{n}_pct"] = pct(frac)
        full[country] = overlap_fraction(regional, global_list)
        rows.append(row)
    if len(full) >= 3:
        classes = overlap_class(full)
        for row in rows:
            row["overlap_class"] = classes[row["country"]]
    else:
        for row in rows:
            row["overlap_class"] = None
    return rows, columns


def correlation_rows(reports, indicator_table: dict, groups_by_scheme: dict):
    by_country = reports_by_country(reports)
    aggregates = {c: aggregate_country(c, items) for c, items in by_country.items()}
    dependencies = {
        "mean": lambda a: float(a.mean_third_party_rate()),
        "dns": lambda a: float(a.kinds[ServiceKind.DNS].third_party_rate),
        "ca": lambda a: float(a.kinds[ServiceKind.CA].third_party_rate),
        "cdn": lambda a: float(a.kinds[ServiceKind.CDN].third_party_rate),
    }
    columns = ["dependency", "indicator", "scope", "n", "r", "strength"]
    rows = []
    for dep_name in ("mean", "dns", "ca", "cdn"):
        for indicator in sorted(indicator_table):
            values = indicator_table[indicator]
            region_groups = groups_by_scheme.get("region", {})
            results = correlate(aggregates, values, indicator,
                                groups=region_groups,
                                dependency=dependencies[dep_name])
            for res in results:
                rows.append({"dependency": dep_name, "indicator": res.indicator,
                             "scope": res.scope, "n": res.n,
                             "r": round(res.r, 4), "strength": res.strength})
    return rows, columns


def group_summary_rows(reports, groups_by_scheme: dict):
    by_country = reports_by_country(reports)
    aggregates = {c: aggregate_country(c, items) for c, items in by_country.items()}
    columns = ["scheme", "group", "n", "min_pct", "q1_pct", "median_pct", "q3_pct", "max_pct"]
    rows = []
    for scheme in sorted(groups_by_scheme):
        groups = {g: members for g, members in groups_by_scheme[scheme].items()
                  if any(c in aggregates for c in members)}
        if not groups:
            continue
        summaries = group_summary(aggregates, groups)
        for group in sorted(summaries):
            mn, q1, med, q3, mx = summaries[group]
            members = [c for c in groups[group] if c in aggregates]
            rows.append({"scheme": scheme, "group": group, "n": len(members),
                         "min_pct": round(mn * 100, 1), "q1_pct": round(q1 * 100, 1),
                         "median_pct": round(med * 100, 1), "q3_pct": round(q3 * 100, 1),
                         "max_pct": round(mx * 100, 1)})
    return rows, columns


def require(condition: bool, stage: str):
    if not condition:
        raise MissingPrerequisite(stage)

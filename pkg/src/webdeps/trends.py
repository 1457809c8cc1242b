"""Ranking-overlap, correlation and grouping analyses.

Covers the regional-vs-global ranking overlap measurements, Pearson
correlation of per-country dependency rates against country indicators
(GDP, KEI, NRI, IDI), and distribution summaries over region, language
and trading-bloc groupings.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .errors import (DataError, EmptyGroup, EmptyRegionalList, LengthMismatch,
                     MalformedRow, MissingIndicator, TooFewCountries,
                     TooFewPoints, ZeroVariance)

INDICATORS = ("GDP", "KEI", "NRI", "IDI")
OVERLAP_CLASSES = ("high", "medium", "low")


@dataclass
class RankedList:
    label: str
    entries: tuple  # domains, rank = position + 1

    def __post_init__(self):
        if len(set(self.entries)) != len(self.entries):
            raise DataError(f"ranked list {self.label!r} has duplicate entries")

    def head(self, n: int) -> "RankedList":
        return RankedList(f"{self.label}[:{n}]", self.entries[:n])


def load_ranked_list(path, label=None) -> RankedList:
    p = Path(path)
    entries = []
    seen = set()
    for ln, raw in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
        domain = raw.strip().lower()
        if not domain or domain.startswith("#"):
            continue
        if domain in seen:
            raise MalformedRow(p, ln, f"duplicate domain {domain}")
        seen.add(domain)
        entries.append(domain)
    return RankedList(label or p.stem, tuple(entries))


def overlap_fraction(regional: RankedList, global_subset: RankedList) -> Fraction:
    """|regional ∩ global_subset| / |regional|."""
    if not regional.entries:
        raise EmptyRegionalList(regional.label)
    inter = set(regional.entries) & set(global_subset.entries)
    return Fraction(len(inter), len(regional.entries))


def overlap_class(overlaps: dict) -> dict:
    """Tertile assignment of countries by overlap: top third 'high',
    middle 'medium', bottom 'low'. Ties rank toward the higher class by
    country-code lexicographic order; class sizes differ by at most 1."""
    if len(overlaps) < 3:
        raise TooFewCountries(f"need >=3 countries, got {len(overlaps)}")
    ordered = sorted(overlaps, key=lambda c: (-Fraction(overlaps[c]), c))
    n = len(ordered)
    base, extra = divmod(n, 3)
    sizes = [base + (1 if i < extra else 0) for i in range(3)]
    out = {}
    pos = 0
    for cls, size in zip(OVERLAP_CLASSES, sizes):
        for country in ordered[pos:pos + size]:
            out[country] = cls
        pos += size
    return out


def pearson(x, y) -> float:
    """Sample Pearson correlation coefficient."""
    if len(x) != len(y):
        raise LengthMismatch(f"{len(x)} vs {len(y)}")
    n = len(x)
    if n < 2:
        raise TooFewPoints(f"need >=2 points, got {n}")
    xs = [float(v) for v in x]
    ys = [float(v) for v in y]
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    sxx = math.fsum((v - mx) ** 2 for v in xs)
    syy = math.fsum((v - my) ** 2 for v in ys)
    if sxx == 0.0 or syy == 0.0:
        raise ZeroVariance("constant series")
    sxy = math.fsum((a - mx) * (b - my) for a, b in zip(xs, ys))
    r = sxy / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def strength_label(r: float) -> str:
    """Band label for r: |r| in [0, 0.3) weak, [0.3, 0.7) moderate,
    [0.7, 1] strong (half-open at both boundaries), plus the sign."""
    magnitude = abs(r)
    if magnitude < 0.3:
        band = "weak"
    elif magnitude < 0.7:
        band = "moderate"
    else:
        band = "strong"
    return f"{band} {'negative' if r < 0 else 'positive'}"


@dataclass
class CorrelationResult:
    indicator: str
    scope: str  # group name or "overall"
    r: float
    n: int
    strength: str


def correlate(aggregates: dict, indicator_values: dict, indicator: str,
              groups: dict = None, dependency=None) -> list:
    """One CorrelationResult overall plus one per group.

    `aggregates` maps country -> CountryAggregate; `indicator_values`
    maps country -> number; `groups` maps group name -> country set.
    The dependency variable defaults to the mean of the DNS, CA and CDN
    third-party rates. Pearson errors inside a group propagate.
    """
    if dependency is None:
        dependency = lambda agg: float(agg.mean_third_party_rate())
    missing = [c for c in aggregates if c not in indicator_values]
    if missing:
        raise MissingIndicator(indicator, missing)

    def result(scope, countries):
        countries = sorted(countries)
        xs = [indicator_values[c] for c in countries]
        ys = [dependency(aggregates[c]) for c in countries]
        r = pearson(xs, ys)
        return CorrelationResult(indicator, scope, r, len(countries), strength_label(r))

    out = [result("overall", aggregates.keys())]
    for group in sorted(groups or {}):
        members = [c for c in groups[group] if c in aggregates]
        out.append(result(group, members))
    return out


def _quantile(sorted_values, q: float) -> float:
    """Linear-interpolation quantile (the common 'R-7' definition)."""
    n = len(sorted_values)
    if n == 1:
        return float(sorted_values[0])
    pos = (n - 1) * q
    lo = math.floor(pos)
    hi = math.ceil(pos)
    frac = pos - lo
    return float(sorted_values[lo]) * (1 - frac) + float(sorted_values[hi]) * frac


def five_number_summary(values):
    data = sorted(float(v) for v in values)
    if not data:
        raise EmptyGroup("no values")
    return (data[0], _quantile(data, 0.25), _quantile(data, 0.5),
            _quantile(data, 0.75), data[-1])


def group_summary(aggregates: dict, groups: dict, dependency=None) -> dict:
    """Five-number summary (min, q1, median, q3, max) of the dependency
    rate per group; box-plot ready."""
    if dependency is None:
        dependency = lambda agg: float(agg.mean_third_party_rate())
    out = {}
    for group in sorted(groups):
        members = [c for c in groups[group] if c in aggregates]
        if not members:
            raise EmptyGroup(group)
        out[group] = five_number_summary(dependency(aggregates[c]) for c in members)
    return out


# -- data-file loaders --------------------------------------------------------

def load_indicators(path) -> dict:
    """CSV `country,indicator,value` -> {indicator: {country: value}}."""
    p = Path(path)
    out = {}
    with p.open(newline="", encoding="utf-8") as fh:
        for ln, row in enumerate(csv.reader(fh), 1):
            if not row or row[0].startswith("#"):
                continue
            if ln == 1 and row[:2] == ["country", "indicator"]:
                continue
            if len(row) != 3:
                raise MalformedRow(p, ln, f"expected 3 columns, got {len(row)}")
            country, indicator, value = row[0].strip().upper(), row[1].strip().upper(), row[2]
            try:
                number = float(value)
            except ValueError:
                raise MalformedRow(p, ln, f"bad value {value!r}")
            if country in out.setdefault(indicator, {}):
                raise MalformedRow(p, ln, f"duplicate ({country}, {indicator})")
            out[indicator][country] = number
    return out


def load_groups(path) -> dict:
    """CSV `scheme,group,country` -> {scheme: {group: set(countries)}}.

    Within region, language and overlap-class a country may appear in
    one group only; trading blocs may overlap.
    """
    p = Path(path)
    out = {}
    seen = {}
    with p.open(newline="", encoding="utf-8") as fh:
        for ln, row in enumerate(csv.reader(fh), 1):
            if not row or row[0].startswith("#"):
                continue
            if ln == 1 and row[:2] == ["scheme", "group"]:
                continue
            if len(row) != 3:
                raise MalformedRow(p, ln, f"expected 3 columns, got {len(row)}")
            scheme, group, country = (row[0].strip().lower(), row[1].strip(),
                                      row[2].strip().upper())
            if scheme != "trading-bloc":
                prev = seen.setdefault((scheme, country), group)
                if prev != group:
                    raise MalformedRow(p, ln, f"{country} in both {prev!r} and {group!r} "
                                              f"under scheme {scheme!r}")
            out.setdefault(scheme, {}).setdefault(group, set()).add(country)
    return out

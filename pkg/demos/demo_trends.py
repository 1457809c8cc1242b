"""Ranking overlap, tertile classes, and indicator correlations using
the bundled indicator and grouping files.

Run: python demos/demo_trends.py
"""

import random

from webdeps import correlate, group_summary, overlap_class, overlap_fraction, pearson
from webdeps.metrics import aggregate_country
from webdeps.providers import _DATA_DIR
from webdeps.trends import RankedList, load_groups, load_indicators

rng = random.Random(2)

print("=" * 70)
print("Overlap of a regional top list with growing global subsets")
print("=" * 70)
global_pool = [f"g{i}.example" for i in range(100_000)]
# a regional list that mixes globally popular and purely local sites
regional = RankedList("XX", tuple(rng.sample(global_pool[:30_000], 350)
                                  + [f"local{i}.xx" for i in range(150)]))
for size in (1_000, 5_000, 10_000, 20_000, 50_000, 100_000):
    subset = RankedList(f"top{size}", tuple(global_pool[:size]))
    frac = overlap_fraction(regional, subset)
    print(f"  top-{size:>6}: {float(frac):6.1%}")

print()
print("=" * 70)
print("Tertile classes over synthetic country overlaps")
print("=" * 70)
overlaps = {f"C{i:02d}": rng.random() for i in range(12)}
classes = overlap_class(overlaps)
for country in sorted(overlaps, key=lambda c: -overlaps[c]):
    print(f"  {country}  overlap={overlaps[country]:.2f}  -> {classes[country]}")

print()
print("=" * 70)
print("Correlating dependency against an indicator")
print("=" * 70)
# synthetic aggregates: dependency loosely tracks the indicator
from corpus_free_reports import make_country_reports  # noqa: E402  (defined below)

indicators = load_indicators(_DATA_DIR / "indicators.csv")
groups = load_groups(_DATA_DIR / "country_groups.csv")
print(f"bundled indicators: {sorted(indicators)} over {len(indicators['GDP'])} countries")
print(f"bundled grouping schemes: {sorted(groups)}")

x = [1.0, 2.0, 3.0, 4.0]
y = [2.0, 1.0, 4.0, 3.0]
print(f"\npearson({x}, {y}) = {pearson(x, y):.3f}")

countries = ["US", "DE", "JP", "BR", "IN", "ZA", "FR", "KR"]
aggregates = {c: aggregate_country(c, make_country_reports(c, seed=i, bias=indicators["GDP"][c]))
              for i, c in enumerate(countries)}
region_groups = {g: members & set(countries)
                 for g, members in groups["region"].items()
                 if members & set(countries)}
results = correlate(aggregates, indicators["GDP"], "GDP",
                    {g: m for g, m in region_groups.items() if len(m) >= 2})
for res in results:
    print(f"  GDP vs dependency [{res.scope:>22}]: r={res.r:+.2f} ({res.strength}, n={res.n})")

print()
print("=" * 70)
print("Five-number summaries per trading bloc (box-plot ready)")
print("=" * 70)
bloc_groups = {g: members & set(countries)
               for g, members in groups["trading-bloc"].items()
               if members & set(countries)}
for group, summary in group_summary(aggregates, bloc_groups).items():
    mn, q1, med, q3, mx = summary
    print(f"  {group:10} min={mn:.2f} q1={q1:.2f} median={med:.2f} q3={q3:.2f} max={mx:.2f}")

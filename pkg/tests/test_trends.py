"""Overlap, tertile, Pearson and grouping analyses against independent
oracles (numpy / direct formula / sorting)."""

import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from corpus import random_corpus
from webdeps.errors import (EmptyGroup, EmptyRegionalList, LengthMismatch,
                            MalformedRow, MissingIndicator, TooFewCountries,
                            TooFewPoints, ZeroVariance)
from webdeps.metrics import aggregate_country
from webdeps.trends import (RankedList, correlate, five_number_summary,
                            group_summary, load_groups, load_indicators,
                            load_ranked_list, overlap_class, overlap_fraction,
                            pearson, strength_label)


def _rl(label, *entries):
    return RankedList(label, tuple(entries))


# -- overlap -------------------------------------------------------------------

def test_overlap_containment():
    regional = _rl("r", "a.test", "b.test")
    global_list = _rl("g", "a.test", "b.test", "c.test")
    assert overlap_fraction(regional, global_list) == 1


def test_overlap_disjoint():
    assert overlap_fraction(_rl("r", "a.test"), _rl("g", "z.test")) == 0


def test_overlap_half():
    regional = _rl("r", "a.test", "b.test", "c.test", "d.test")
    global_list = _rl("g", "a.test", "b.test", "x.test")
    # brute force: count membership one by one
    expected = Fraction(sum(1 for e in regional.entries if e in global_list.entries),
                        len(regional.entries))
    assert expected == Fraction(1, 2)
    assert overlap_fraction(regional, global_list) == expected


def test_overlap_empty_regional():
    with pytest.raises(EmptyRegionalList):
        overlap_fraction(_rl("r"), _rl("g", "a.test"))


def test_overlap_monotone_under_subset_growth():
    rng = random.Random(5)
    pool = [f"d{i}.test" for i in range(200)]
    for _ in range(50):
        regional = _rl("r", *rng.sample(pool, 30))
        big = rng.sample(pool, rng.randint(50, 200))
        small = big[:rng.randint(1, len(big))]
        f_small = overlap_fraction(regional, _rl("g1", *small))
        f_big = overlap_fraction(regional, _rl("g2", *big))
        assert f_small <= f_big


def test_duplicate_entries_rejected():
    with pytest.raises(Exception):
        _rl("r", "a.test", "a.test")


# -- tertiles ---------------------------------------------------------------------

def test_tertiles_basic():
    classes = overlap_class({"AA": 0.9, "BB": 0.5, "CC": 0.1})
    assert classes == {"AA": "high", "BB": "medium", "CC": "low"}


def test_tertiles_all_equal_deterministic():
    classes = overlap_class({"CC": 0.5, "AA": 0.5, "BB": 0.5})
    # lexicographic tie-break toward the higher class
    assert classes == {"AA": "high", "BB": "medium", "CC": "low"}


def test_tertiles_too_few():
    with pytest.raises(TooFewCountries):
        overlap_class({"AA": 0.1, "BB": 0.2})


@pytest.mark.parametrize("n", [3, 4, 5, 50, 115])
def test_tertile_sizes_differ_by_at_most_one(n):
    rng = random.Random(n)
    overlaps = {f"C{i:03d}": rng.random() for i in range(n)}
    classes = overlap_class(overlaps)
    sizes = [sum(1 for v in classes.values() if v == cls)
             for cls in ("high", "medium", "low")]
    assert sum(sizes) == n
    assert max(sizes) - min(sizes) <= 1


# -- pearson ---------------------------------------------------------------------

def _pearson_oracle(x, y):
    """Textbook formula, computed independently."""
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    num = sum((a - mx) * (b - my) for a, b in zip(x, y))
    den = math.sqrt(sum((a - mx) ** 2 for a in x) * sum((b - my) ** 2 for b in y))
    return num / den


def test_pearson_perfect_positive():
    x = [1.0, 2.0, 3.0, 4.0]
    assert pearson(x, x) == pytest.approx(1.0, abs=1e-15)


def test_pearson_perfect_negative():
    x = [1.0, 2.0, 3.0, 4.0]
    y = [-v for v in x]
    assert pearson(x, y) == pytest.approx(-1.0, abs=1e-15)


def test_pearson_worked_example():
    x = [1.0, 2.0, 3.0, 4.0]
    y = [2.0, 1.0, 4.0, 3.0]
    # direct formula gives 3.0 / sqrt(5*5) = 0.6
    assert _pearson_oracle(x, y) == pytest.approx(0.6, abs=1e-15)
    assert abs(pearson(x, y) - _pearson_oracle(x, y)) < 1e-12


def test_pearson_matches_numpy_on_random_series():
    rng = random.Random(17)
    for _ in range(200):
        n = rng.randint(2, 40)
        x = [rng.uniform(-100, 100) for _ in range(n)]
        y = [rng.uniform(-100, 100) for _ in range(n)]
        if len(set(x)) == 1 or len(set(y)) == 1:
            continue
        expected = np.corrcoef(x, y)[0, 1]
        assert abs(pearson(x, y) - expected) < 1e-12


def test_pearson_errors():
    with pytest.raises(LengthMismatch):
        pearson([1, 2], [1, 2, 3])
    with pytest.raises(TooFewPoints):
        pearson([1], [2])
    with pytest.raises(ZeroVariance):
        pearson([1, 1, 1], [1, 2, 3])


@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=30),
       st.floats(0.1, 50), st.floats(-100, 100))
def test_pearson_symmetry_and_affine_invariance(x, scale, shift):
    rng = random.Random(int(sum(x)) & 0xFFFF)
    y = [rng.uniform(-1e6, 1e6) for _ in x]
    try:
        r = pearson(x, y)
    except ZeroVariance:
        return
    assert pearson(y, x) == pytest.approx(r, abs=1e-12)
    scaled = [scale * v + shift for v in x]
    try:
        assert pearson(scaled, y) == pytest.approx(r, abs=1e-9)
        assert pearson([-v for v in x], y) == pytest.approx(-r, abs=1e-12)
    except ZeroVariance:
        pass


def test_strength_bands_and_boundaries():
    assert strength_label(0.0) == "weak positive"
    assert strength_label(0.29) == "weak positive"
    assert strength_label(0.3) == "moderate positive"  # boundary: half-open
    assert strength_label(0.69) == "moderate positive"
    assert strength_label(0.7) == "strong positive"  # boundary: half-open
    assert strength_label(1.0) == "strong positive"
    assert strength_label(-0.29) == "weak negative"
    assert strength_label(-0.3) == "moderate negative"
    assert strength_label(-0.7) == "strong negative"


# -- correlate --------------------------------------------------------------------

def _aggregates_for(countries, seed=0):
    out = {}
    for i, country in enumerate(countries):
        rng = random.Random(seed + i)
        out[country] = aggregate_country(country, random_corpus(rng, 20, country))
    return out


def test_correlate_identity_indicator():
    aggregates = _aggregates_for(["US", "DE", "JP", "BR", "IN", "ZA"])
    values = {c: float(a.mean_third_party_rate()) for c, a in aggregates.items()}
    groups = {"g1": {"US", "DE", "JP"}, "g2": {"BR", "IN", "ZA"}}
    results = correlate(aggregates, values, "GDP", groups)
    assert all(res.r == pytest.approx(1.0, abs=1e-12) for res in results)
    scopes = [res.scope for res in results]
    assert scopes == ["overall", "g1", "g2"]


def test_correlate_two_country_group_degenerate():
    aggregates = _aggregates_for(["US", "DE"])
    values = {"US": 1.0, "DE": 2.0}
    try:
        results = correlate(aggregates, values, "GDP", {})
        assert abs(abs(results[0].r) - 1.0) < 1e-12
    except ZeroVariance:
        pass


def test_correlate_missing_indicator_lists_countries():
    aggregates = _aggregates_for(["US", "DE", "JP"])
    values = {"US": 1.0}
    with pytest.raises(MissingIndicator) as err:
        correlate(aggregates, values, "KEI", {})
    assert err.value.countries == ["DE", "JP"]


# -- group summaries ----------------------------------------------------------------

def test_summary_single_value():
    assert five_number_summary([0.4]) == (0.4, 0.4, 0.4, 0.4, 0.4)


def test_summary_median_odd():
    mn, q1, med, q3, mx = five_number_summary([0.2, 0.4, 0.6])
    assert med == pytest.approx(0.4)
    assert (mn, mx) == (0.2, 0.6)


def test_summary_matches_numpy_oracle():
    rng = random.Random(23)
    for _ in range(100):
        data = [rng.uniform(0, 1) for _ in range(rng.randint(1, 40))]
        mn, q1, med, q3, mx = five_number_summary(data)
        assert mn == min(data) and mx == max(data)
        assert q1 == pytest.approx(np.percentile(data, 25), abs=1e-12)
        assert med == pytest.approx(np.percentile(data, 50), abs=1e-12)
        assert q3 == pytest.approx(np.percentile(data, 75), abs=1e-12)
        assert mn <= q1 <= med <= q3 <= mx


def test_group_summary_bounds_and_empty():
    aggregates = _aggregates_for(["US", "DE", "JP"])
    summaries = group_summary(aggregates, {"all": {"US", "DE", "JP"}})
    mn, q1, med, q3, mx = summaries["all"]
    values = [float(a.mean_third_party_rate()) for a in aggregates.values()]
    assert min(values) == mn and max(values) == mx
    with pytest.raises(EmptyGroup):
        group_summary(aggregates, {"none": {"XX"}})


# -- loaders -----------------------------------------------------------------------

def test_load_indicators(tmp_path):
    path = tmp_path / "ind.csv"
    path.write_text("country,indicator,value\nUS,GDP,63000\nDE,GDP,46000\nUS,KEI,9.1\n")
    table = load_indicators(path)
    assert table["GDP"] == {"US": 63000.0, "DE": 46000.0}
    assert table["KEI"] == {"US": 9.1}


def test_load_indicators_bad_value(tmp_path):
    path = tmp_path / "ind.csv"
    path.write_text("US,GDP,not-a-number\n")
    with pytest.raises(MalformedRow):
        load_indicators(path)


def test_load_groups(tmp_path):
    path = tmp_path / "groups.csv"
    path.write_text("scheme,group,country\n"
                    "region,America,US\nregion,America,CA\nregion,Europe,DE\n"
                    "trading-bloc,NAFTA,US\ntrading-bloc,APEC,US\n")
    groups = load_groups(path)
    assert groups["region"]["America"] == {"US", "CA"}
    assert groups["trading-bloc"]["NAFTA"] == {"US"}


def test_load_groups_rejects_double_membership_outside_blocs(tmp_path):
    path = tmp_path / "groups.csv"
    path.write_text("region,America,US\nregion,Europe,US\n")
    with pytest.raises(MalformedRow):
        load_groups(path)


def test_load_ranked_list(tmp_path):
    path = tmp_path / "US.txt"
    path.write_text("Example.com\nsite.test\n\n# comment\nthird.test\n")
    rl = load_ranked_list(path)
    assert rl.label == "US"
    assert rl.entries == ("example.com", "site.test", "third.test")
    path2 = tmp_path / "dup.txt"
    path2.write_text("a.test\na.test\n")
    with pytest.raises(MalformedRow):
        load_ranked_list(path2)

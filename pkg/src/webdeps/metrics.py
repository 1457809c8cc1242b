"""Country-level aggregation of per-site dependency reports: third-party
and critical dependency rates, redundancy, top-k provider centralization,
and indirect (transitive) dependencies.

All rates are exact fractions.Fraction values; rendering to one-decimal
percentages happens only at export time. Unknown-verdict services never
count toward private or third-party numerators but stay in denominators,
surfaced via unknown_rate.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .classify import (Classification, ServiceKind, SiteDependencyReport,
                       find_service_type, _STRENGTH)
from .errors import EmptyCorpus, NoThirdPartySites
from .providers import CdnCnameMap
from .psl import PublicSuffixList

THIRD = Classification.THIRD_PARTY
PRIVATE = Classification.PRIVATE
UNKNOWN = Classification.UNKNOWN


def _classifications(report: SiteDependencyReport, kind: ServiceKind) -> list:
    if kind is ServiceKind.DNS:
        return report.dns
    if kind is ServiceKind.CA:
        return [report.ca] if report.ca else []
    return report.cdns


def _provider_key(c) -> str:
    if c.kind is ServiceKind.CDN:
        return c.cdn_name
    return c.provider if c.provider is not None else c.service_host


def provider_verdicts(report: SiteDependencyReport, kind: ServiceKind) -> dict:
    """provider key -> collapsed verdict (private beats third beats unknown)."""
    out = {}
    for c in _classifications(report, kind):
        key = _provider_key(c)
        if key not in out or _STRENGTH[c.verdict] > _STRENGTH[out[key]]:
            out[key] = c.verdict
    return out


def has_third_party(report: SiteDependencyReport, kind: ServiceKind) -> bool:
    return any(c.verdict is THIRD for c in _classifications(report, kind))


def has_unknown(report: SiteDependencyReport, kind: ServiceKind) -> bool:
    return any(c.verdict is UNKNOWN for c in _classifications(report, kind))


def is_critical(report: SiteDependencyReport, kind: ServiceKind) -> bool:
    """Single point of third-party failure for this site and kind.

    DNS: every nameserver under one provider, and it is third-party.
    CDN: exactly one CDN hosts the site, and it is third-party.
    CA:  HTTPS + third-party CA + no OCSP stapling.
    """
    if kind is ServiceKind.CA:
        return (report.https_supported
                and report.ca is not None and report.ca.verdict is THIRD
                and not report.ocsp_stapled)
    verdicts = provider_verdicts(report, kind)
    return len(verdicts) == 1 and next(iter(verdicts.values())) is THIRD


def _require(reports):
    if not reports:
        raise EmptyCorpus("no reports")


def third_party_rate(reports, kind: ServiceKind) -> Fraction:
    """Fraction of sites with >=1 third-party service of this kind."""
    _require(reports)
    return Fraction(sum(has_third_party(r, kind) for r in reports), len(reports))


def critical_rate(reports, kind: ServiceKind) -> Fraction:
    _require(reports)
    return Fraction(sum(is_critical(r, kind) for r in reports), len(reports))


def unknown_rate(reports, kind: ServiceKind) -> Fraction:
    _require(reports)
    return Fraction(sum(has_unknown(r, kind) for r in reports), len(reports))


def redundancy_rates(reports, kind: ServiceKind):
    """(redundant, multi_third, mixed) fractions for DNS or CDN.

    redundant: >1 distinct provider; multi_third: >1 distinct third-party
    provider; mixed: >=1 third-party and >=1 private provider.
    """
    if kind is ServiceKind.CA:
        raise ValueError("redundancy is defined for DNS and CDN only")
    _require(reports)
    redundant = multi_third = mixed = 0
    for r in reports:
        verdicts = provider_verdicts(r, kind)
        n_third = sum(v is THIRD for v in verdicts.values())
        n_private = sum(v is PRIVATE for v in verdicts.values())
        redundant += len(verdicts) > 1
        multi_third += n_third > 1
        mixed += n_third >= 1 and n_private >= 1
    n = len(reports)
    return Fraction(redundant, n), Fraction(multi_third, n), Fraction(mixed, n)


def provider_ranking(reports, kind: ServiceKind) -> list:
    """[(provider, distinct third-party-dependent site count)] ranked by
    count descending, ties broken lexicographically by provider id."""
    _require(reports)
    sites_by_provider = {}
    for r in reports:
        for c in _classifications(r, kind):
            if c.verdict is THIRD:
                key = _provider_key(c)
                sites_by_provider.setdefault(key, set()).add((r.site.country, r.site.domain))
    return sorted(((p, len(s)) for p, s in sites_by_provider.items()),
                  key=lambda kv: (-kv[1], kv[0]))


def top_k_coverage(reports, kind: ServiceKind, k: int):
    """(fraction, ranked providers): share of third-party-dependent sites
    served by one of the k most-used third-party providers."""
    if k < 1:
        raise ValueError("k must be >= 1")
    ranking = provider_ranking(reports, kind)
    dependent = [r for r in reports if has_third_party(r, kind)]
    if not dependent:
        raise NoThirdPartySites(kind.value)
    top = {p for p, _count in ranking[:k]}
    covered = 0
    for r in dependent:
        providers = {_provider_key(c) for c in _classifications(r, kind)
                     if c.verdict is THIRD}
        covered += bool(providers & top)
    return Fraction(covered, len(dependent)), ranking


@dataclass
class KindStats:
    third_party_rate: Fraction
    critical_rate: Fraction
    unknown_rate: Fraction
    top_k_coverage: dict  # k -> Fraction, empty when no third-party sites
    top_providers: list  # ranked (provider, count)


@dataclass
class CountryAggregate:
    country: str
    n_sites: int
    kinds: dict  # ServiceKind -> KindStats
    dns_redundant_rate: Fraction
    dns_multi_third_rate: Fraction
    dns_mixed_rate: Fraction
    cdn_redundant_rate: Fraction
    cdn_multi_third_rate: Fraction
    cdn_mixed_rate: Fraction
    https_rate: Fraction
    ocsp_rate: Fraction

    def mean_third_party_rate(self) -> Fraction:
        """Unweighted mean of the DNS, CA and CDN third-party rates; the
        dependency variable for the correlation analyses."""
        rates = [self.kinds[k].third_party_rate for k in
                 (ServiceKind.DNS, ServiceKind.CA, ServiceKind.CDN)]
        return sum(rates, Fraction(0)) / 3


def aggregate_country(country: str, reports, top_ks=(1, 3, 5)) -> CountryAggregate:
    _require(reports)
    kinds = {}
    for kind in ServiceKind:
        coverage = {}
        ranking = []
        for k in top_ks:
            try:
                coverage[k], ranking = top_k_coverage(reports, kind, k)
            except NoThirdPartySites:
                coverage = {}
                ranking = provider_ranking(reports, kind)
                break
        kinds[kind] = KindStats(
            third_party_rate=third_party_rate(reports, kind),
            critical_rate=critical_rate(reports, kind),
            unknown_rate=unknown_rate(reports, kind),
            top_k_coverage=coverage,
            top_providers=ranking[:max(top_ks)],
        )
    dns_red, dns_multi, dns_mixed = redundancy_rates(reports, ServiceKind.DNS)
    cdn_red, cdn_multi, cdn_mixed = redundancy_rates(reports, ServiceKind.CDN)
    n = len(reports)
    return CountryAggregate(
        country=country, n_sites=n, kinds=kinds,
        dns_redundant_rate=dns_red, dns_multi_third_rate=dns_multi,
        dns_mixed_rate=dns_mixed,
        cdn_redundant_rate=cdn_red, cdn_multi_third_rate=cdn_multi,
        cdn_mixed_rate=cdn_mixed,
        https_rate=Fraction(sum(r.https_supported for r in reports), n),
        ocsp_rate=Fraction(sum(r.ocsp_stapled for r in reports), n),
    )


# -- indirect (transitive) dependencies --------------------------------------
# `prober` arguments are duck-typed: anything with facts_for(hostname)
# returning probe.ServiceHostFacts works (live, cached, or fake).

def _dns_verdict_for_host(facts, psl) -> Classification:
    """Collapsed verdict of the host's own nameservers under the rule
    chain with the host as subject."""
    best = UNKNOWN
    san = facts.san_list if facts.https_supported else ()
    for ns in facts.nameservers:
        verdict, _rule = find_service_type(facts.hostname, ns, san,
                                           facts.soa_authority,
                                           facts.ns_soa_authorities.get(ns), psl)
        if _STRENGTH[verdict] > _STRENGTH[best]:
            best = verdict
    return best


def _cdn_dependence_for_host(facts, cdn_map: CdnCnameMap, psl):
    """CDN names reached through the host's CNAME chain together with the
    collapsed verdict per CDN."""
    per_cdn = {}
    san = facts.san_list if facts.https_supported else ()
    for name in facts.cname_chain:
        cdn = cdn_map.lookup(name)
        if not cdn:
            continue
        verdict, _rule = find_service_type(facts.hostname, name, san,
                                           facts.soa_authority,
                                           facts.chain_soa.get(name), psl)
        if cdn not in per_cdn or _STRENGTH[verdict] > _STRENGTH[per_cdn[cdn]]:
            per_cdn[cdn] = verdict
    return per_cdn


@dataclass
class IndirectLeg:
    n_providers: int
    third_party_fraction: Optional[Fraction]  # None when no providers observed
    newly_dependent_sites: int

    def to_dict(self):
        frac = None if self.third_party_fraction is None else float(self.third_party_fraction)
        return {"n_providers": self.n_providers, "third_party_fraction": frac,
                "newly_dependent_sites": self.newly_dependent_sites}


@dataclass
class IndirectDependencyReport:
    country: str
    cdn_to_dns: IndirectLeg
    ca_to_dns: IndirectLeg
    ca_to_cdn: IndirectLeg

    def to_dict(self):
        return {"country": self.country, "cdn_to_dns": self.cdn_to_dns.to_dict(),
                "ca_to_dns": self.ca_to_dns.to_dict(),
                "ca_to_cdn": self.ca_to_cdn.to_dict()}


def indirect_dependencies(country: str, reports, prober, cdn_map: CdnCnameMap,
                          psl: PublicSuffixList) -> IndirectDependencyReport:
    """Transitive dependence of the country's CDNs and CAs.

    Each CDN is examined through its observed supporting CNAMEs; each CA
    through its directory url. A site is newly dependent when it had no
    direct third-party service of the target kind but uses a private or
    unknown provider that itself turns out third-party-dependent.
    """
    _require(reports)

    cdn_cnames = {}  # cdn name -> set of representative cnames
    ca_hosts = set()
    for r in reports:
        for c in r.cdns:
            cdn_cnames.setdefault(c.cdn_name, set()).add(c.service_host)
        if r.ca and r.ca.service_host:
            ca_hosts.add(r.ca.service_host)

    # CDN -> DNS
    cdn_dns_third = set()
    for cdn, cnames in cdn_cnames.items():
        best = UNKNOWN
        for cname in sorted(cnames):
            verdict = _dns_verdict_for_host(prober.facts_for(cname), psl)
            if _STRENGTH[verdict] > _STRENGTH[best]:
                best = verdict
        if best is THIRD:
            cdn_dns_third.add(cdn)
    cdn_leg = IndirectLeg(
        n_providers=len(cdn_cnames),
        third_party_fraction=(Fraction(len(cdn_dns_third), len(cdn_cnames))
                              if cdn_cnames else None),
        newly_dependent_sites=sum(
            1 for r in reports
            if not has_third_party(r, ServiceKind.DNS)
            and any(c.verdict in (PRIVATE, UNKNOWN) and c.cdn_name in cdn_dns_third
                    for c in r.cdns)),
    )

    # CA -> DNS
    ca_dns_third = set()
    ca_cdn_third = set()
    for host in sorted(ca_hosts):
        facts = prober.facts_for(host)
        if _dns_verdict_for_host(facts, psl) is THIRD:
            ca_dns_third.add(host)
        per_cdn = _cdn_dependence_for_host(facts, cdn_map, psl)
        if any(v is THIRD for v in per_cdn.values()):
            ca_cdn_third.add(host)

    def _newly(kind, third_hosts):
        count = 0
        for r in reports:
            if has_third_party(r, kind):
                continue
            c = r.ca
            if c and c.verdict in (PRIVATE, UNKNOWN) and c.service_host in third_hosts:
                count += 1
        return count

    ca_dns_leg = IndirectLeg(
        n_providers=len(ca_hosts),
        third_party_fraction=(Fraction(len(ca_dns_third), len(ca_hosts))
                              if ca_hosts else None),
        newly_dependent_sites=_newly(ServiceKind.DNS, ca_dns_third),
    )
    ca_cdn_leg = IndirectLeg(
        n_providers=len(ca_hosts),
        third_party_fraction=(Fraction(len(ca_cdn_third), len(ca_hosts))
                              if ca_hosts else None),
        newly_dependent_sites=_newly(ServiceKind.CDN, ca_cdn_third),
    )
    return IndirectDependencyReport(country, cdn_leg, ca_dns_leg, ca_cdn_leg)

"""Country-level aggregation: dependency, criticality, redundancy,
top-k centralization and indirect dependencies on a synthetic corpus.

Run: python demos/demo_country_metrics.py
"""

import random

from webdeps import aggregate_country, indirect_dependencies
from webdeps.classify import (Classification, Rule, ServiceClassification,
                              ServiceKind, SiteDependencyReport)
from webdeps.probe import ServiceHostFacts, SiteRecord
from webdeps.providers import CdnCnameMap
from webdeps.psl import load_default_psl

rng = random.Random(1)
psl = load_default_psl()

PROVIDERS = ["bigdns.example", "middns.example", "own"]
CDNS = ["MegaCDN", "EdgeCo"]


def make_report(country, rank):
    """A site with a plausible mix of private and third-party services."""
    site = SiteRecord(f"site{rank}.{country.lower()}.example", country, rank)
    dns = []
    provider = rng.choices(PROVIDERS, weights=[5, 2, 3])[0]
    if provider == "own":
        host = f"ns1.{site.domain}"
        dns.append(ServiceClassification(site, ServiceKind.DNS, host, site.domain,
                                         None, Classification.PRIVATE, Rule.TLD_MATCH))
    else:
        for i in range(rng.randint(1, 2)):
            dns.append(ServiceClassification(site, ServiceKind.DNS,
                                             f"ns{i}.{provider}", provider, None,
                                             Classification.THIRD_PARTY,
                                             Rule.SOA_MISMATCH))
    https = rng.random() < 0.7
    ca = None
    if https:
        ca = ServiceClassification(site, ServiceKind.CA, "bigca.example",
                                   "bigca.example", None,
                                   Classification.THIRD_PARTY, Rule.SOA_MISMATCH)
    cdns = []
    for cdn in rng.sample(CDNS, rng.randint(0, 2)):
        cdns.append(ServiceClassification(site, ServiceKind.CDN,
                                          f"edge.{cdn.lower()}.example",
                                          f"{cdn.lower()}.example", cdn,
                                          Classification.THIRD_PARTY,
                                          Rule.SOA_MISMATCH))
    return SiteDependencyReport(site=site, dns=dns, ca=ca, cdns=cdns,
                                internal_resources=[], https_supported=https,
                                ocsp_stapled=https and rng.random() < 0.25)


reports = [make_report("US", rank) for rank in range(1, 101)]
agg = aggregate_country("US", reports)

print("=" * 70)
print(f"Country aggregate over {agg.n_sites} sites")
print("=" * 70)
for kind in ServiceKind:
    stats = agg.kinds[kind]
    print(f"{kind.value.upper():4} third-party {float(stats.third_party_rate):6.1%}   "
          f"critical {float(stats.critical_rate):6.1%}   "
          f"unknown {float(stats.unknown_rate):6.1%}")
print(f"\nHTTPS {float(agg.https_rate):.1%}   OCSP stapling {float(agg.ocsp_rate):.1%}")
print(f"DNS redundancy {float(agg.dns_redundant_rate):.1%} "
      f"(multi-third {float(agg.dns_multi_third_rate):.1%}, "
      f"mixed {float(agg.dns_mixed_rate):.1%})")

print()
print("=" * 70)
print("Centralization: share of third-party sites on the top-k providers")
print("=" * 70)
for kind in ServiceKind:
    stats = agg.kinds[kind]
    ranked = ", ".join(f"{p} ({n})" for p, n in stats.top_providers[:3])
    ks = "  ".join(f"top-{k}={float(v):.1%}" for k, v in sorted(stats.top_k_coverage.items()))
    print(f"{kind.value.upper():4} {ks}")
    print(f"     leaders: {ranked}")

print()
print("=" * 70)
print("Indirect dependencies (the CDNs' own DNS, probed via cached facts)")
print("=" * 70)


class CannedProber:
    """Offline stand-in: MegaCDN outsources its DNS, EdgeCo runs its own."""
    facts = {
        "edge.megacdn.example": ServiceHostFacts(
            hostname="edge.megacdn.example",
            nameservers=("ns1.bigdns.example",),
            soa_authority="megacdn.example",
            ns_soa_authorities={"ns1.bigdns.example": "bigdns.example"}),
        "edge.edgeco.example": ServiceHostFacts(
            hostname="edge.edgeco.example",
            nameservers=("ns1.edgeco.example",),
            soa_authority="edgeco.example",
            ns_soa_authorities={"ns1.edgeco.example": "edgeco.example"}),
        "bigca.example": ServiceHostFacts(
            hostname="bigca.example",
            nameservers=("ns1.bigdns.example",),
            soa_authority="bigcadns.example",
            ns_soa_authorities={"ns1.bigdns.example": "bigdns.example"}),
    }

    def facts_for(self, hostname):
        return self.facts.get(hostname, ServiceHostFacts(hostname=hostname))


indirect = indirect_dependencies("US", reports, CannedProber(),
                                 CdnCnameMap([("unused.example", "X")]), psl)
for leg_name, leg in (("CDN -> DNS", indirect.cdn_to_dns),
                      ("CA  -> DNS", indirect.ca_to_dns),
                      ("CA  -> CDN", indirect.ca_to_cdn)):
    frac = "n/a" if leg.third_party_fraction is None else f"{float(leg.third_party_fraction):.1%}"
    print(f"{leg_name}: {leg.n_providers} providers examined, {frac} third-party-dependent, "
          f"{leg.newly_dependent_sites} newly dependent sites")

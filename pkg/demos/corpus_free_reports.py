"""Synthetic per-country report builder for the demos: third-party share
scales with a bias value so correlation demos show a real signal."""

import random

from webdeps.classify import (Classification, Rule, ServiceClassification,
                              ServiceKind, SiteDependencyReport)
from webdeps.probe import SiteRecord


def make_country_reports(country, seed=0, bias=30000.0, n_sites=60):
    rng = random.Random(seed)
    p_third = min(0.85, 0.25 + bias / 120_000)  # wealthier -> more outsourcing
    reports = []
    for rank in range(1, n_sites + 1):
        site = SiteRecord(f"s{rank}.{country.lower()}.example", country, rank)
        third = rng.random() < p_third
        if third:
            dns = [ServiceClassification(site, ServiceKind.DNS, "ns1.bigdns.example",
                                         "bigdns.example", None,
                                         Classification.THIRD_PARTY, Rule.SOA_MISMATCH)]
            cdns = [ServiceClassification(site, ServiceKind.CDN, "e.megacdn.example",
                                          "megacdn.example", "MegaCDN",
                                          Classification.THIRD_PARTY, Rule.SOA_MISMATCH)]
        else:
            dns = [ServiceClassification(site, ServiceKind.DNS, f"ns1.{site.domain}",
                                         site.domain, None,
                                         Classification.PRIVATE, Rule.TLD_MATCH)]
            cdns = []
        https = rng.random() < 0.8
        ca = None
        if https:
            verdict = Classification.THIRD_PARTY if third else Classification.PRIVATE
            rule = Rule.SOA_MISMATCH if third else Rule.TLD_MATCH
            ca = ServiceClassification(site, ServiceKind.CA, "bigca.example",
                                       "bigca.example", None, verdict, rule)
        reports.append(SiteDependencyReport(site=site, dns=dns, ca=ca, cdns=cdns,
                                            internal_resources=[],
                                            https_supported=https,
                                            ocsp_stapled=https and rng.random() < 0.3))
    return reports

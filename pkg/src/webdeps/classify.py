"""Private / third-party / unknown classification of the DNS, CA and CDN
services a site uses.

The per-service rule chain runs strictly in order:

  1. tld-match    site and service share a registrable domain -> private
  2. san-list     service's registrable domain appears in the site's
                  certificate SAN list (HTTPS sites only) -> private
  3. soa-mismatch both SOA authorities known and different -> third-party
  otherwise      unknown

DNS adds a corpus-wide promotion: an unknown nameserver whose provider
serves more than `threshold` distinct sites is promoted to third-party.
CDNs are recognized by fingerprinting every name in the CNAME chains of
a site's internal resources; each (site, CDN) pair inherits the
strongest verdict among its supporting CNAMEs (private beats third-party
beats unknown).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional
from urllib.parse import urlparse

from .errors import EmptyNameserverSet
from .probe import ProbeResult, SiteRecord
from .providers import CdnCnameMap
from .psl import PublicSuffixList, provider_id


class ServiceKind(str, Enum):
    DNS = "dns"
    CA = "ca"
    CDN = "cdn"


class Classification(str, Enum):
    PRIVATE = "private"
    THIRD_PARTY = "third-party"
    UNKNOWN = "unknown"


class Rule(str, Enum):
    TLD_MATCH = "tld-match"
    SAN_LIST = "san-list"
    SOA_MISMATCH = "soa-mismatch"
    CONCENTRATION = "concentration"
    NONE = "none"


# verdict precedence when one service is supported by several observations
_STRENGTH = {Classification.PRIVATE: 2, Classification.THIRD_PARTY: 1, Classification.UNKNOWN: 0}


@dataclass
class ServiceClassification:
    site: SiteRecord
    kind: ServiceKind
    service_host: str
    provider: Optional[str]
    cdn_name: Optional[str]
    verdict: Classification
    rule_fired: Rule

    def to_dict(self):
        return {"kind": self.kind.value, "service_host": self.service_host,
                "provider": self.provider, "cdn_name": self.cdn_name,
                "verdict": self.verdict.value, "rule_fired": self.rule_fired.value}

    @classmethod
    def from_dict(cls, site, d):
        return cls(site, ServiceKind(d["kind"]), d["service_host"], d["provider"],
                   d["cdn_name"], Classification(d["verdict"]), Rule(d["rule_fired"]))


@dataclass
class SiteDependencyReport:
    site: SiteRecord
    dns: list  # ServiceClassification per nameserver
    ca: Optional[ServiceClassification]
    cdns: list  # ServiceClassification per (site, CDN) pair
    internal_resources: list  # sorted unique URLs
    https_supported: bool
    ocsp_stapled: bool

    def to_dict(self):
        return {"site": self.site.to_dict(),
                "dns": [c.to_dict() for c in self.dns],
                "ca": self.ca.to_dict() if self.ca else None,
                "cdns": [c.to_dict() for c in self.cdns],
                "internal_resources": list(self.internal_resources),
                "https_supported": self.https_supported,
                "ocsp_stapled": self.ocsp_stapled}

    @classmethod
    def from_dict(cls, d):
        site = SiteRecord.from_dict(d["site"])
        return cls(site,
                   [ServiceClassification.from_dict(site, c) for c in d["dns"]],
                   ServiceClassification.from_dict(site, d["ca"]) if d["ca"] else None,
                   [ServiceClassification.from_dict(site, c) for c in d["cdns"]],
                   list(d["internal_resources"]),
                   d["https_supported"], d["ocsp_stapled"])


def san_registrable_domains(san_list, psl: PublicSuffixList) -> set:
    """Registrable domains covered by a SAN list; wildcard labels are
    stripped before extraction ("*.example.com" covers example.com)."""
    out = set()
    for entry in san_list:
        name = entry.lower().lstrip("*").lstrip(".")
        rd = provider_id(name, psl)
        if rd:
            out.add(rd)
    return out


def find_service_type(site_domain: str, service_host: str, san_list,
                      soa_of_site: Optional[str], soa_of_service: Optional[str],
                      psl: PublicSuffixList):
    """The three-rule chain; returns (Classification, Rule).

    Total: anything that defeats all three rules (including missing SOA
    data on either side) is unknown. Callers pass the SAN list only for
    HTTPS sites, so rule 2 never fires for HTTP-only sites.
    """
    site_rd = provider_id(site_domain, psl)
    service_rd = provider_id(service_host, psl) if service_host else None
    if site_rd and service_rd and site_rd == service_rd:
        return Classification.PRIVATE, Rule.TLD_MATCH
    if service_rd and service_rd in san_registrable_domains(san_list, psl):
        return Classification.PRIVATE, Rule.SAN_LIST
    if soa_of_site and soa_of_service and soa_of_site != soa_of_service:
        return Classification.THIRD_PARTY, Rule.SOA_MISMATCH
    return Classification.UNKNOWN, Rule.NONE


def classify_dns(site: SiteRecord, dns_facts, san_list, concentration: dict,
                 threshold: int, psl: PublicSuffixList) -> list:
    """One classification per nameserver, with the concentration
    promotion applied to unknown verdicts."""
    if not dns_facts.nameservers:
        raise EmptyNameserverSet(site.domain)
    out = []
    for ns in sorted(dns_facts.nameservers):
        verdict, rule = find_service_type(site.domain, ns, san_list,
                                          dns_facts.soa_authority,
                                          dns_facts.ns_soa_authorities.get(ns), psl)
        prov = provider_id(ns, psl)
        if verdict is Classification.UNKNOWN and prov is not None \
                and concentration.get(prov, 0) > threshold:
            verdict, rule = Classification.THIRD_PARTY, Rule.CONCENTRATION
        out.append(ServiceClassification(site, ServiceKind.DNS, ns, prov, None,
                                         verdict, rule))
    return out


def classify_ca(site: SiteRecord, tls_facts, soa_of_site: Optional[str],
                soa_of_ca: Optional[str], psl: PublicSuffixList):
    """CA classification; absent for HTTP-only sites, unknown when the
    issuer is not in the CA directory."""
    if tls_facts is None or not tls_facts.https_supported:
        return None
    ca_url = tls_facts.ca_url
    if not ca_url:
        return ServiceClassification(site, ServiceKind.CA, "", None, None,
                                     Classification.UNKNOWN, Rule.NONE)
    verdict, rule = find_service_type(site.domain, ca_url, tls_facts.san_list,
                                      soa_of_site, soa_of_ca, psl)
    return ServiceClassification(site, ServiceKind.CA, ca_url,
                                 provider_id(ca_url, psl), None, verdict, rule)


def identify_internal_resources(site: SiteRecord, resources, san_list,
                                soa_of_site: Optional[str], soa_by_host: dict,
                                psl: PublicSuffixList) -> list:
    """Filter a site's resource URLs down to the internal ones.

    Internal iff the resource host shares the site's registrable domain,
    appears in the SAN list, or shares the site's SOA authority. Note the
    orientation: an SOA *match* indicates internal here, the inverse of
    the rule chain's mismatch=>third-party.
    """
    if resources is None:
        return []
    site_rd = provider_id(site.domain, psl)
    san_rds = san_registrable_domains(san_list, psl)
    internal = set()
    for url in resources.resources:
        host = urlparse(url).hostname
        if not host:
            continue
        rd = provider_id(host, psl)
        if rd and site_rd and rd == site_rd:
            internal.add(url)
        elif rd and rd in san_rds:
            internal.add(url)
        elif soa_of_site and soa_by_host.get(host) == soa_of_site:
            internal.add(url)
    return sorted(internal)


def classify_cdns(site: SiteRecord, internal_resources, cname_chains: dict,
                  cdn_map: CdnCnameMap, san_list, soa_of_site: Optional[str],
                  soa_by_host: dict, psl: PublicSuffixList) -> list:
    """Map internal-resource CNAME chains through the fingerprint table,
    then classify each (site, CDN) pair from its supporting CNAMEs."""
    supporting = {}  # cdn name -> set of cnames
    for url in internal_resources:
        host = urlparse(url).hostname
        chain = cname_chains.get(host)
        if not chain:
            continue
        for name in chain.names():
            cdn = cdn_map.lookup(name)
            if cdn:
                supporting.setdefault(cdn, set()).add(name)
    out = []
    for cdn in sorted(supporting):
        best = None  # (verdict, rule, cname)
        for cname in sorted(supporting[cdn]):
            verdict, rule = find_service_type(site.domain, cname, san_list,
                                              soa_of_site, soa_by_host.get(cname), psl)
            if best is None or _STRENGTH[verdict] > _STRENGTH[best[0]]:
                best = (verdict, rule, cname)
        verdict, rule, cname = best
        out.append(ServiceClassification(site, ServiceKind.CDN, cname,
                                         provider_id(cname, psl), cdn, verdict, rule))
    return out


def compute_concentration(dns_facts_by_domain: dict, psl: PublicSuffixList) -> dict:
    """provider -> number of distinct sites with >=1 nameserver under it.

    Keyed by unique domain: a site with several nameservers under one
    provider still contributes one.
    """
    counts = {}
    for _domain, facts in dns_facts_by_domain.items():
        if facts is None:
            continue
        providers = {provider_id(ns, psl) for ns in facts.nameservers}
        for prov in providers:
            if prov is not None:
                counts[prov] = counts.get(prov, 0) + 1
    return counts


def classify_site(result: ProbeResult, concentration: dict, threshold: int,
                  cdn_map: CdnCnameMap, psl: PublicSuffixList) -> SiteDependencyReport:
    """Full per-site pass: DNS, CA, internal-resource filter, CDNs."""
    site = result.site
    tls = result.tls
    https = bool(tls and tls.https_supported)
    san = tls.san_list if https else ()
    soa_site = result.dns.soa_authority if result.dns else None

    dns_cls = []
    if result.dns is not None:
        dns_cls = classify_dns(site, result.dns, san, concentration, threshold, psl)

    soa_by_host = result.soa_authorities
    ca_cls = classify_ca(site, tls, soa_site,
                         soa_by_host.get(tls.ca_url) if tls and tls.ca_url else None, psl)

    internal = identify_internal_resources(site, result.resources, san,
                                           soa_site, soa_by_host, psl)
    cdn_cls = classify_cdns(site, internal, result.cnames, cdn_map, san,
                            soa_site, soa_by_host, psl)

    return SiteDependencyReport(site=site, dns=dns_cls, ca=ca_cls, cdns=cdn_cls,
                                internal_resources=internal,
                                https_supported=https,
                                ocsp_stapled=bool(tls and tls.ocsp_stapled))

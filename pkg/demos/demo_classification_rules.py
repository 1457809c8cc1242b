"""Walk through the service classification rule chain on synthetic facts.

Shows each rule firing in order: registrable-domain match, SAN-list
rescue (the case that saves video sites whose nameservers live under the
parent company's domain), SOA mismatch, the concentration promotion for
unknowns, and the unknown fallback.

Run: python demos/demo_classification_rules.py
"""

from webdeps import SiteRecord, find_service_type, classify_dns, compute_concentration
from webdeps.probe import DnsFacts
from webdeps.psl import load_default_psl

psl = load_default_psl()


def show(title, site, service, san, soa_site, soa_service):
    verdict, rule = find_service_type(site, service, san, soa_site, soa_service, psl)
    print(f"{title}")
    print(f"  site={site}  service={service}")
    print(f"  SAN={list(san) or '-'}  SOA(site)={soa_site or '-'}  SOA(service)={soa_service or '-'}")
    print(f"  -> {verdict.value} ({rule.value})\n")


print("=" * 70)
print("Rule 1: shared registrable domain means private")
print("=" * 70)
show("nameserver under the site's own domain",
     "example.com", "ns1.example.com", (), None, None)

print("=" * 70)
print("Rule 2: certificate SAN list rescues shared-operator services")
print("=" * 70)
# The classic miss: a video site's nameservers sit under the parent
# company's domain. Plain domain comparison calls that third-party; the
# site's certificate covering the parent domain proves shared ownership.
show("nameserver under the parent company's domain, SAN covers it",
     "videos.example", "ns1.parentco.example",
     ("videos.example", "*.parentco.example"), "parentdns.example", "parentdns.example")

print("=" * 70)
print("Rule 3: differing SOA authorities expose third parties")
print("=" * 70)
show("managed DNS provider, no certificate relation",
     "shop.example", "ns1.bigdns.example", (), "shopdns.example", "bigdns.example")

print("=" * 70)
print("Fallback: nothing fires, verdict stays unknown")
print("=" * 70)
show("no SAN, missing SOA on one side",
     "shop.example", "ns1.mystery.example", (), "shopdns.example", None)

print("=" * 70)
print("Concentration promotion: popular unknowns become third-party")
print("=" * 70)
# 60 sites all delegating to hugedns.example; each individual
# classification is unknown (equal SOA authorities), but the provider's
# corpus-wide footprint promotes it.
facts = {}
for i in range(60):
    facts[f"site{i}.example"] = DnsFacts(
        nameservers=(f"ns{i % 4}.hugedns.example",),
        soa_authority="hugedns.example",
        ns_soa_authorities={f"ns{i % 4}.hugedns.example": "hugedns.example"})
concentration = compute_concentration(facts, psl)
print(f"corpus concentration for hugedns.example: {concentration['hugedns.example']} sites")

site = SiteRecord("site0.example", "US", 1)
for threshold in (50, 100):
    out = classify_dns(site, facts["site0.example"], (), concentration, threshold, psl)
    c = out[0]
    print(f"threshold {threshold:>3}: {c.service_host} -> {c.verdict.value} ({c.rule_fired.value})")

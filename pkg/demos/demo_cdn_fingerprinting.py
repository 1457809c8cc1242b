"""CDN recognition from CNAME chains plus internal-resource filtering.

A site's page pulls resources from several hostnames; only the internal
ones (same registrable domain, SAN-covered, or same SOA authority) count
toward its CDN set, and the CDN operators are read off the CNAME chains
through the bundled fingerprint map.

Run: python demos/demo_cdn_fingerprinting.py
"""

from webdeps import SiteRecord, classify_cdns, identify_internal_resources, lookup_cdn
from webdeps.probe import CnameChain, ResourceSet
from webdeps.providers import load_default_cdn_map
from webdeps.psl import load_default_psl

psl = load_default_psl()
cdn_map = load_default_cdn_map()

print("=" * 70)
print("Fingerprint lookups (longest suffix wins, label boundaries only)")
print("=" * 70)
for cname in ("img.shop.example.edgekey.net", "d1a2b3.cloudfront.net",
              "assets.example.com.cdn.cloudflare.net", "notcloudfront.net",
              "cache.fastly.net"):
    print(f"  {cname:45} -> {lookup_cdn(cname, cdn_map)}")

print()
print("=" * 70)
print("Internal-resource filter")
print("=" * 70)
site = SiteRecord("shop.example", "US", 1)
resources = ResourceSet((
    "https://shop.example/",                      # the page itself
    "https://static.shop.example/app.js",         # same registrable domain
    "https://images.shopcdn.example/logo.png",    # covered by the cert SAN
    "https://cdn.fulfillment.example/w.js",       # shares the site's SOA authority
    "https://tracker.analytics.example/t.js",     # unrelated: excluded
), "har-import")
san = ("shop.example", "*.shopcdn.example")
soa_by_host = {"cdn.fulfillment.example": "shopdns.example"}
internal = identify_internal_resources(site, resources, san, "shopdns.example",
                                       soa_by_host, psl)
for url in resources.resources:
    marker = "internal" if url in internal else "excluded"
    print(f"  [{marker}] {url}")

print()
print("=" * 70)
print("Per-(site, CDN) verdicts from the supporting CNAMEs")
print("=" * 70)
chains = {
    "static.shop.example": CnameChain(
        "static.shop.example",
        ("shop.example.edgekey.net", "e1234.a.akamaiedge.net"),
        "e1234.a.akamaiedge.net"),
    "images.shopcdn.example": CnameChain(
        "images.shopcdn.example", ("d1a2b3.cloudfront.net",), "d1a2b3.cloudfront.net"),
}
soa_by_host.update({
    "shop.example.edgekey.net": "akamdns.example",
    "e1234.a.akamaiedge.net": "akamdns.example",
    "d1a2b3.cloudfront.net": "awsdns.example",
})
pairs = classify_cdns(site, internal, chains, cdn_map, san, "shopdns.example",
                      soa_by_host, psl)
for pair in pairs:
    print(f"  {pair.cdn_name:20} via {pair.service_host:32} "
          f"-> {pair.verdict.value} ({pair.rule_fired.value})")

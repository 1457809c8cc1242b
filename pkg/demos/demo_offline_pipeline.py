"""The snapshot store and CLI stages driven offline: canned probe results
go into a snapshot, classification runs over it, and reports export to
CSV. No network involved.

Run: python demos/demo_offline_pipeline.py
"""

import tempfile
from pathlib import Path

import webdeps.cli as cli
from webdeps.config import RunConfig
from webdeps.probe import (CnameChain, DnsFacts, ProbeResult, ResourceSet,
                           SiteRecord, TlsFacts)
from webdeps.store import SnapshotStore

base = Path(tempfile.mkdtemp(prefix="webdeps_demo_"))
store = SnapshotStore(base / "snapshots")
store.create("demo", "none")

print(f"workspace: {base}\n")

CANNED = [
    # (domain, country, rank, nameserver, ns provider soa, site soa, https)
    ("shop.aa", "AA", 1, "ns1.shop.aa", "shopdns.aa", "shopdns.aa", True),
    ("news.aa", "AA", 2, "ns1.bigdns.aa", "bigdns.aa", "newsdns.aa", True),
    ("bank.aa", "AA", 3, "ns1.bigdns.aa", "bigdns.aa", "bankdns.aa", False),
    ("mail.bb", "BB", 1, "ns1.mail.bb", "maildns.bb", "maildns.bb", True),
    ("play.bb", "BB", 2, "ns1.middns.bb", "middns.bb", "playdns.bb", True),
]

for domain, country, rank, ns, ns_soa, site_soa, https in CANNED:
    site = SiteRecord(domain, country, rank)
    tls = TlsFacts(https, (domain,) if https else (), "Big CA" if https else None,
                   "bigca.example" if https else None, False)
    result = ProbeResult(
        site=site,
        dns=DnsFacts((ns,), site_soa, {ns: ns_soa}),
        tls=tls,
        resources=ResourceSet((f"https://{domain}/",), "har-import"),
        cnames={domain: CnameChain(domain, (), domain)},
        soa_authorities={domain: site_soa, "bigca.example": "bigcadns.example"},
        probe_time="2026-01-01T00:00:00+00:00",
        errors=[],
    )
    store.append_probe("demo", result)

config = RunConfig.defaults({"store": str(base / "snapshots")})
reports = cli.run_classify("demo", config, store)
print(f"classified {len(reports)} sites:")
for r in reports:
    dns = ", ".join(f"{c.service_host}={c.verdict.value}" for c in r.dns)
    ca = r.ca.verdict.value if r.ca else "-"
    print(f"  {r.site.country} #{r.site.rank} {r.site.domain:10} dns[{dns}] ca={ca}")

print()
from webdeps.exports import aggregate_rows, centralization_rows, write_rows

for what in ("country-aggregates", "centralization"):
    out = base / f"{what}.csv"
    if what == "country-aggregates":
        rows, columns = aggregate_rows(reports)
    else:
        rows, columns = centralization_rows(reports, k=3, aliases={})
    write_rows(rows, columns, "csv", out)
    print(f"--- {out.name} ---")
    print(out.read_text())

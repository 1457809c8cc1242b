"""Per-site network fact collection: nameservers, SOA authorities, TLS
certificate facts (issuer, SAN list, OCSP stapling), page resources and
CNAME chains.

Every probe stage is isolated: probe_site records stage failures in
ProbeResult.errors and keeps whatever the other stages produced. All DNS
names in returned facts are normalized (lowercase, no trailing dot).
"""

from __future__ import annotations

import html.parser
import json
import socket
import ssl
import subprocess
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional
from urllib.parse import urljoin, urlparse

from .dnsclient import Resolver
from .errors import (ChainTooLong, FetchFailed, MalformedHar, MalformedHostname,
                     ResolutionFailed)
from .psl import PublicSuffixList, normalize_hostname, provider_id

HAR_IMPORT = "har-import"
HTML_FALLBACK = "html-fallback"

_RESOURCE_TAGS = {"script", "img", "link", "iframe", "source"}


@dataclass(frozen=True)
class SiteRecord:
    """One ranked website within a country list."""
    domain: str
    country: str
    rank: int

    def __post_init__(self):
        object.__setattr__(self, "domain", normalize_hostname(self.domain))
        object.__setattr__(self, "country", self.country.upper())
        if len(self.country) != 2 or not self.country.isalpha():
            raise ValueError(f"bad country code {self.country!r}")
        if self.rank < 1:
            raise ValueError(f"rank must be >= 1, got {self.rank}")

    def to_dict(self):
        return {"domain": self.domain, "country": self.country, "rank": self.rank}

    @classmethod
    def from_dict(cls, d):
        return cls(d["domain"], d["country"], d["rank"])


@dataclass
class DnsFacts:
    nameservers: tuple  # sorted tuple of DNS names
    soa_authority: Optional[str]  # registrable domain of the site zone's SOA MNAME
    ns_soa_authorities: dict  # nameserver -> registrable domain of its SOA MNAME (or None)

    def to_dict(self):
        return {"nameservers": list(self.nameservers),
                "soa_authority": self.soa_authority,
                "ns_soa_authorities": dict(sorted(self.ns_soa_authorities.items()))}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["nameservers"]), d["soa_authority"], dict(d["ns_soa_authorities"]))


@dataclass
class TlsFacts:
    https_supported: bool
    san_list: tuple = ()
    ca_name: Optional[str] = None
    ca_url: Optional[str] = None
    ocsp_stapled: bool = False

    def to_dict(self):
        return {"https_supported": self.https_supported, "san_list": list(self.san_list),
                "ca_name": self.ca_name, "ca_url": self.ca_url,
                "ocsp_stapled": self.ocsp_stapled}

    @classmethod
    def from_dict(cls, d):
        return cls(d["https_supported"], tuple(d["san_list"]), d["ca_name"],
                   d["ca_url"], d["ocsp_stapled"])


@dataclass
class ResourceSet:
    resources: tuple  # absolute URLs in acquisition order
    source: str  # HAR_IMPORT or HTML_FALLBACK

    def hostnames(self) -> list:
        seen, out = set(), []
        for url in self.resources:
            host = urlparse(url).hostname
            if host and host not in seen:
                seen.add(host)
                out.append(host)
        return out

    def to_dict(self):
        return {"resources": list(self.resources), "source": self.source}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["resources"]), d["source"])


@dataclass
class CnameChain:
    origin: str
    chain: tuple  # ordered CNAME targets; empty when origin has no CNAME
    terminal: str  # final non-CNAME name (origin itself when chain is empty)

    def names(self) -> tuple:
        return self.chain

    def to_dict(self):
        return {"origin": self.origin, "chain": list(self.chain), "terminal": self.terminal}

    @classmethod
    def from_dict(cls, d):
        return cls(d["origin"], tuple(d["chain"]), d["terminal"])


@dataclass
class ProbeResult:
    site: SiteRecord
    dns: Optional[DnsFacts]
    tls: Optional[TlsFacts]
    resources: Optional[ResourceSet]
    cnames: dict  # resource hostname -> CnameChain
    soa_authorities: dict  # auxiliary hostname -> SOA authority (or None)
    probe_time: str
    errors: list = field(default_factory=list)  # [(stage, message)]

    def to_dict(self):
        return {
            "site": self.site.to_dict(),
            "dns": self.dns.to_dict() if self.dns else None,
            "tls": self.tls.to_dict() if self.tls else None,
            "resources": self.resources.to_dict() if self.resources else None,
            "cnames": {h: c.to_dict() for h, c in sorted(self.cnames.items())},
            "soa_authorities": dict(sorted(self.soa_authorities.items())),
            "probe_time": self.probe_time,
            "errors": [list(e) for e in self.errors],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            site=SiteRecord.from_dict(d["site"]),
            dns=DnsFacts.from_dict(d["dns"]) if d["dns"] else None,
            tls=TlsFacts.from_dict(d["tls"]) if d["tls"] else None,
            resources=ResourceSet.from_dict(d["resources"]) if d["resources"] else None,
            cnames={h: CnameChain.from_dict(c) for h, c in d["cnames"].items()},
            soa_authorities=dict(d["soa_authorities"]),
            probe_time=d["probe_time"],
            errors=[tuple(e) for e in d["errors"]],
        )


class RateLimiter:
    """Enforces a minimum interval between operations sharing a key."""

    def __init__(self, min_interval: float = 0.0):
        self.min_interval = min_interval
        self._last = {}
        self._lock = threading.Lock()

    def wait(self, key: str):
        if self.min_interval <= 0:
            return
        while True:
            with self._lock:
                now = time.monotonic()
                last = self._last.get(key, 0.0)
                delay = last + self.min_interval - now
                if delay <= 0:
                    self._last[key] = now
                    return
            time.sleep(delay)


@dataclass
class ProbeContext:
    """Everything probe_site needs besides the site itself."""
    resolver: Resolver
    psl: PublicSuffixList
    ca_directory: dict
    har_dir: Optional[Path] = None
    connect_map: dict = field(default_factory=dict)  # domain (or "*") -> "host:port" for TLS
    http_connect_map: dict = field(default_factory=dict)  # same, for the HTTP fallback
    tls_timeout: float = 10.0
    http_timeout: float = 10.0
    cname_depth: int = 8
    rate_limiter: RateLimiter = field(default_factory=RateLimiter)
    openssl_path: str = "openssl"

    @staticmethod
    def _override(mapping: dict, domain: str, default_port: int):
        override = mapping.get(domain) or mapping.get("*")
        if override:
            host, _, port = override.partition(":")
            return host, int(port) if port else default_port
        return domain, default_port

    def connect_address(self, domain: str, default_port: int):
        return self._override(self.connect_map, domain, default_port)

    def http_connect_address(self, domain: str, default_port: int):
        return self._override(self.http_connect_map, domain, default_port)


def _soa_authority(name: str, resolver: Resolver, psl: PublicSuffixList) -> Optional[str]:
    """Registrable domain of the SOA MNAME covering `name`.

    Queries the exact name; a NODATA answer falls back to the SOA in the
    authority section (how recursives indicate the covering zone), then
    walks up one label and retries.
    """
    candidates = [name]
    parent = name.split(".", 1)
    if len(parent) == 2 and "." in parent[1]:
        candidates.append(parent[1])
    for candidate in candidates:
        try:
            resp = resolver.query(candidate, "SOA")
        except ResolutionFailed:
            continue
        records = resp.answer_records("SOA") or [rr for rr in resp.authorities
                                                 if rr.rtype == 6]
        if records:
            return provider_id(records[0].data.mname, psl)
    return None


def probe_dns(domain: str, resolver: Resolver, psl: PublicSuffixList) -> DnsFacts:
    """NS lookup plus SOA authorities for the site and each nameserver."""
    name = normalize_hostname(domain)
    resp = resolver.query(name, "NS")
    nameservers = sorted({rr.data.rstrip(".").lower() for rr in resp.answer_records("NS")})
    if not nameservers:
        # NODATA at the exact name: the zone cut is one label up
        parts = name.split(".", 1)
        if len(parts) == 2 and "." in parts[1]:
            resp = resolver.query(parts[1], "NS")
            nameservers = sorted({rr.data.rstrip(".").lower() for rr in resp.answer_records("NS")})
    if not nameservers:
        raise ResolutionFailed(name, "NODATA", "no NS records")
    soa_site = _soa_authority(name, resolver, psl)
    ns_soa = {ns: _soa_authority(ns, resolver, psl) for ns in nameservers}
    return DnsFacts(tuple(nameservers), soa_site, ns_soa)


def _issuer_organization(cert) -> Optional[str]:
    from cryptography.x509.oid import NameOID
    org = cert.issuer.get_attributes_for_oid(NameOID.ORGANIZATION_NAME)
    if org:
        return org[0].value
    cn = cert.issuer.get_attributes_for_oid(NameOID.COMMON_NAME)
    return cn[0].value if cn else None


def _check_ocsp_stapling(connect_host: str, port: int, server_name: str,
                         timeout: float, openssl_path: str) -> bool:
    """Ask once with the status-request extension via `openssl s_client`.

    The stdlib ssl module cannot request certificate status, so this
    shells out; a missing binary or parse failure is treated as not
    stapled (conservative for the criticality metric).
    """
    try:
        proc = subprocess.run(
            [openssl_path, "s_client", "-connect", f"{connect_host}:{port}",
             "-servername", server_name, "-status"],
            input=b"", capture_output=True, timeout=timeout + 5)
    except (OSError, subprocess.TimeoutExpired):
        return False
    out = proc.stdout.decode("utf-8", "replace")
    return "OCSP Response Status: successful" in out


def probe_tls(domain: str, ctx: ProbeContext, port: int = 443) -> TlsFacts:
    """TLS handshake facts. A failed handshake means HTTP-only, never an
    exception; only a TCP-level connection failure is surfaced (raised as
    ConnectionError) so probe_site can record it as a stage error."""
    name = normalize_hostname(domain)
    connect_host, connect_port = ctx.connect_address(name, port)
    ctx.rate_limiter.wait(connect_host)
    sslctx = ssl.SSLContext(ssl.PROTOCOL_TLS_CLIENT)
    sslctx.check_hostname = False
    sslctx.verify_mode = ssl.CERT_NONE
    try:
        sock = socket.create_connection((connect_host, connect_port), timeout=ctx.tls_timeout)
    except OSError as exc:
        raise ConnectionError(f"tcp connect to {connect_host}:{connect_port} failed: {exc}")
    try:
        with sslctx.wrap_socket(sock, server_hostname=name) as tls_sock:
            der = tls_sock.getpeercert(True)
    except (ssl.SSLError, OSError, ValueError):
        return TlsFacts(https_supported=False)
    if not der:
        return TlsFacts(https_supported=False)

    from cryptography import x509
    cert = x509.load_der_x509_certificate(der)
    try:
        san_ext = cert.extensions.get_extension_for_class(x509.SubjectAlternativeName)
        san = tuple(v.lower() for v in san_ext.value.get_values_for_type(x509.DNSName))
    except x509.ExtensionNotFound:
        san = ()
    ca_name = _issuer_organization(cert)
    ca_url = ctx.ca_directory.get(ca_name.lower()) if ca_name else None
    stapled = _check_ocsp_stapling(connect_host, connect_port, name,
                                   ctx.tls_timeout, ctx.openssl_path)
    return TlsFacts(True, san, ca_name, ca_url, stapled)


def ingest_har(path) -> ResourceSet:
    """Extract request URLs from a HAR 1.2 file, in entry order.

    Entries whose URL is not absolute with a hostname (data:, about:)
    are skipped; they carry no dependency signal.
    """
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedHar(f"{path}: {exc}")
    log = raw.get("log") if isinstance(raw, dict) else None
    if not isinstance(log, dict) or not isinstance(log.get("entries"), list):
        raise MalformedHar(f"{path}: missing log.entries")
    urls = []
    for i, entry in enumerate(log["entries"]):
        try:
            url = entry["request"]["url"]
        except (KeyError, TypeError):
            raise MalformedHar(f"{path}: entry {i} has no request.url")
        parsed = urlparse(url)
        if parsed.scheme in ("http", "https") and parsed.hostname:
            urls.append(url)
    return ResourceSet(tuple(urls), HAR_IMPORT)


class _ResourceExtractor(html.parser.HTMLParser):
    def __init__(self, base_url: str):
        super().__init__()
        self.base_url = base_url
        self.urls = []

    def handle_starttag(self, tag, attrs):
        if tag not in _RESOURCE_TAGS:
            return
        for key, value in attrs:
            if key in ("src", "href") and value:
                absolute = urljoin(self.base_url, value.strip())
                parsed = urlparse(absolute)
                if parsed.scheme in ("http", "https") and parsed.hostname:
                    self.urls.append(absolute)


def fetch_resources_fallback(domain: str, ctx: ProbeContext) -> ResourceSet:
    """Fetch the root page and pull src/href URLs out of resource tags.

    Degraded substitute for browser-driven HAR capture: no scripts run,
    so dynamically loaded resources are invisible. The page URL itself
    is always the first entry.
    """
    import requests
    import urllib3
    urllib3.disable_warnings()
    name = normalize_hostname(domain)
    last_exc = None
    for scheme, default_port in (("https", 443), ("http", 80)):
        connect_host, connect_port = ctx.http_connect_address(name, default_port)
        if (connect_host, connect_port) == (name, default_port):
            url = f"{scheme}://{name}/"
        else:
            url = f"{scheme}://{connect_host}:{connect_port}/"
        ctx.rate_limiter.wait(connect_host)
        try:
            reply = requests.get(url, timeout=ctx.http_timeout, verify=False,
                                 headers={"Host": name, "User-Agent": "webdeps/0.1"})
        except requests.RequestException as exc:
            last_exc = exc
            continue
        page_url = f"{scheme}://{name}/"
        extractor = _ResourceExtractor(page_url)
        try:
            extractor.feed(reply.text)
        except Exception:
            pass
        return ResourceSet((page_url, *extractor.urls), HTML_FALLBACK)
    raise FetchFailed(f"{name}: {last_exc}")


def resolve_cname_chain(hostname: str, resolver: Resolver, psl=None,
                        max_depth: int = 8) -> CnameChain:
    """Follow CNAME records to the terminal name; loop-free, bounded."""
    origin = normalize_hostname(hostname)
    seen = {origin}
    chain = []
    current = origin
    while True:
        try:
            resp = resolver.query(current, "CNAME")
        except ResolutionFailed:
            if chain:
                break  # dangling target; keep the names already seen
            raise
        targets = resp.answer_records("CNAME")
        if not targets:
            break
        target = targets[0].data.rstrip(".").lower()
        if target in seen:
            raise ChainTooLong(f"{origin}: CNAME loop at {target}")
        chain.append(target)
        seen.add(target)
        if len(chain) > max_depth:
            raise ChainTooLong(f"{origin}: chain exceeds {max_depth}")
        current = target
    return CnameChain(origin, tuple(chain), chain[-1] if chain else origin)


@dataclass
class ServiceHostFacts:
    """Probe facts for a service host examined as the subject of the
    rule chain during indirect-dependency analysis (a CDN's CNAME or a
    CA's url)."""
    hostname: str
    nameservers: tuple = ()
    soa_authority: Optional[str] = None
    ns_soa_authorities: dict = field(default_factory=dict)
    https_supported: bool = False
    san_list: tuple = ()
    cname_chain: tuple = ()
    chain_soa: dict = field(default_factory=dict)

    def to_dict(self):
        return {"hostname": self.hostname, "nameservers": list(self.nameservers),
                "soa_authority": self.soa_authority,
                "ns_soa_authorities": dict(sorted(self.ns_soa_authorities.items())),
                "https_supported": self.https_supported,
                "san_list": list(self.san_list),
                "cname_chain": list(self.cname_chain),
                "chain_soa": dict(sorted(self.chain_soa.items()))}

    @classmethod
    def from_dict(cls, d):
        return cls(d["hostname"], tuple(d["nameservers"]), d["soa_authority"],
                   dict(d["ns_soa_authorities"]), d["https_supported"],
                   tuple(d["san_list"]), tuple(d["cname_chain"]),
                   dict(d["chain_soa"]))


class CachedServiceProber:
    """Dict-backed prober for offline runs; raises when facts are missing."""

    def __init__(self, facts: dict):
        self.facts = facts

    def facts_for(self, hostname: str) -> ServiceHostFacts:
        try:
            return self.facts[hostname]
        except KeyError:
            from .errors import ProbeUnavailable
            raise ProbeUnavailable(f"no cached facts for {hostname}")


class LiveServiceProber:
    """Probes service hosts on demand; results are cached per hostname
    and can be exported for later offline runs."""

    def __init__(self, ctx: ProbeContext, seed: dict = None):
        self.ctx = ctx
        self.cache = dict(seed or {})

    def facts_for(self, hostname: str) -> ServiceHostFacts:
        if hostname in self.cache:
            return self.cache[hostname]
        facts = ServiceHostFacts(hostname=hostname)
        try:
            dns_facts = probe_dns(hostname, self.ctx.resolver, self.ctx.psl)
            facts.nameservers = dns_facts.nameservers
            facts.soa_authority = dns_facts.soa_authority
            facts.ns_soa_authorities = dns_facts.ns_soa_authorities
        except (ResolutionFailed, MalformedHostname):
            pass
        try:
            tls = probe_tls(hostname, self.ctx)
            facts.https_supported = tls.https_supported
            facts.san_list = tls.san_list
        except (ConnectionError, MalformedHostname):
            pass
        try:
            chain = resolve_cname_chain(hostname, self.ctx.resolver,
                                        self.ctx.psl, self.ctx.cname_depth)
            facts.cname_chain = chain.chain
            facts.chain_soa = {name: _soa_authority(name, self.ctx.resolver, self.ctx.psl)
                               for name in chain.chain}
        except (ResolutionFailed, ChainTooLong, MalformedHostname):
            pass
        self.cache[hostname] = facts
        return facts


def probe_site(site: SiteRecord, ctx: ProbeContext) -> ProbeResult:
    """Run all probe stages for one site; failures never abort the rest."""
    errors = []
    dns_facts = tls_facts = resources = None
    cnames = {}
    soa_auth = {}

    ctx.rate_limiter.wait(f"resolver:{ctx.resolver.address[0]}")
    try:
        dns_facts = probe_dns(site.domain, ctx.resolver, ctx.psl)
    except (ResolutionFailed, MalformedHostname) as exc:
        errors.append(("dns", str(exc)))

    try:
        tls_facts = probe_tls(site.domain, ctx)
    except ConnectionError as exc:
        errors.append(("tls", str(exc)))
        tls_facts = TlsFacts(https_supported=False)

    har_path = ctx.har_dir / f"{site.domain}.har" if ctx.har_dir else None
    if har_path and har_path.exists():
        try:
            resources = ingest_har(har_path)
        except MalformedHar as exc:
            errors.append(("resources", str(exc)))
    else:
        try:
            resources = fetch_resources_fallback(site.domain, ctx)
        except FetchFailed as exc:
            errors.append(("resources", str(exc)))

    if resources:
        for host in resources.hostnames():
            try:
                chain = resolve_cname_chain(host, ctx.resolver, ctx.psl, ctx.cname_depth)
            except (ResolutionFailed, ChainTooLong, MalformedHostname) as exc:
                errors.append(("cname", f"{host}: {exc}"))
                continue
            cnames[host] = chain

    # auxiliary SOA authorities for every service host the classifier may test
    aux_hosts = set()
    if tls_facts and tls_facts.ca_url:
        aux_hosts.add(tls_facts.ca_url)
    if resources:
        aux_hosts.update(resources.hostnames())
    for chain in cnames.values():
        aux_hosts.update(chain.chain)
    for host in sorted(aux_hosts):
        try:
            soa_auth[host] = _soa_authority(host, ctx.resolver, ctx.psl)
        except MalformedHostname:
            soa_auth[host] = None

    return ProbeResult(
        site=site, dns=dns_facts, tls=tls_facts, resources=resources,
        cnames=cnames, soa_authorities=soa_auth,
        probe_time=datetime.now(timezone.utc).isoformat(),
        errors=errors,
    )

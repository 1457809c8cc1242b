"""Probe operations against stub DNS, TLS and HTTP fixtures."""

import json

import pytest
from hypothesis import given, strategies as st

from conftest import StubDnsServer, free_port, start_http_server
from webdeps.dnsclient import Resolver
from webdeps.errors import ChainTooLong, MalformedHar, FetchFailed, ResolutionFailed
from webdeps.probe import (CnameChain, ProbeContext, ResourceSet, SiteRecord,
                           fetch_resources_fallback, ingest_har, probe_dns,
                           probe_site, probe_tls, resolve_cname_chain)
from webdeps.providers import load_ca_directory


@pytest.fixture(scope="module")
def dns_stub():
    server = StubDnsServer({
        "ns": {"fix.test": ["NS1.fix.test.", "ns2.fix.test"],
               "multi.test": ["ns1.other.test"]},
        "soa": {"fix.test": "dns1.fixdns.test",
                "ns1.fix.test": "dns1.fixdns.test",
                "ns2.fix.test": "dns1.fixdns.test",
                "other.test": "dns.otherdns.test",
                "cdn.test": "dns.cdndns.test"},
        "cname": {"a.fix.test": "b.fix.test",
                  "b.fix.test": "c.cdn.test",
                  "loop1.fix.test": "loop2.fix.test",
                  "loop2.fix.test": "loop1.fix.test"},
        "a": {"c.cdn.test": "127.0.0.1", "plain.fix.test": "127.0.0.1",
              "ns1.other.test": "127.0.0.1"},
    })
    yield server
    server.close()


@pytest.fixture(scope="module")
def resolver(dns_stub):
    return Resolver(dns_stub.address, timeout=2, retries=0)


def test_probe_dns_returns_stub_set(dns_stub, resolver, psl):
    facts = probe_dns("fix.test", resolver, psl)
    assert facts.nameservers == ("ns1.fix.test", "ns2.fix.test")  # normalized
    assert facts.soa_authority == "fixdns.test"
    assert facts.ns_soa_authorities["ns1.fix.test"] == "fixdns.test"


def test_probe_dns_nxdomain(resolver, psl):
    with pytest.raises(ResolutionFailed) as err:
        probe_dns("nonexistent.test", resolver, psl)
    assert err.value.kind == "NXDOMAIN"


def test_soa_authority_walks_up_on_nodata(dns_stub, resolver, psl):
    # ns1.other.test has no SOA of its own; other.test provides it via
    # the authority section / parent walk
    facts = probe_dns("multi.test", resolver, psl)
    assert facts.ns_soa_authorities["ns1.other.test"] == "otherdns.test"


def test_cname_chain_identity(resolver, psl):
    chain = resolve_cname_chain("plain.fix.test", resolver, psl)
    assert chain == CnameChain("plain.fix.test", (), "plain.fix.test")


def test_cname_chain_follows(resolver, psl):
    chain = resolve_cname_chain("a.fix.test", resolver, psl)
    assert chain.chain == ("b.fix.test", "c.cdn.test")
    assert chain.terminal == "c.cdn.test"
    assert len(set(chain.chain)) == len(chain.chain)


def test_cname_loop_rejected(resolver, psl):
    with pytest.raises(ChainTooLong):
        resolve_cname_chain("loop1.fix.test", resolver, psl)


# -- HAR ----------------------------------------------------------------------

def _har(urls):
    return {"log": {"entries": [{"request": {"url": u}} for u in urls]}}


def test_ingest_har_three_entries(tmp_path):
    urls = ["https://fix.test/", "https://a.fix.test/x.js", "http://cdn.test/y.png"]
    path = tmp_path / "site.har"
    path.write_text(json.dumps(_har(urls)))
    rs = ingest_har(path)
    assert rs.resources == tuple(urls)
    assert rs.source == "har-import"


def test_ingest_har_empty(tmp_path):
    path = tmp_path / "empty.har"
    path.write_text(json.dumps(_har([])))
    assert ingest_har(path).resources == ()


def test_ingest_har_missing_log(tmp_path):
    path = tmp_path / "bad.har"
    path.write_text(json.dumps({"notlog": {}}))
    with pytest.raises(MalformedHar):
        ingest_har(path)


def test_ingest_har_not_json(tmp_path):
    path = tmp_path / "bad2.har"
    path.write_text("{{{{")
    with pytest.raises(MalformedHar):
        ingest_har(path)


def test_har_roundtrip(tmp_path):
    rs = ResourceSet(("https://fix.test/", "https://cdn.test/a.js"), "har-import")
    path = tmp_path / "rt.har"
    path.write_text(json.dumps(_har(rs.resources)))
    assert ingest_har(path).resources == rs.resources


_url = st.builds(
    lambda scheme, host, path: f"{scheme}://{host}.test/{path}",
    st.sampled_from(["http", "https"]),
    st.text(alphabet="abcdefghijklmnopqrstuvwxyz0123456789", min_size=1, max_size=10),
    st.text(alphabet="abcdefghijklmnopqrstuvwxyz0123456789/._-", max_size=20))


@given(st.lists(_url, max_size=25))
def test_har_roundtrip_property(tmp_path_factory, urls):
    path = tmp_path_factory.mktemp("har") / "round.har"
    path.write_text(json.dumps(_har(urls)))
    assert list(ingest_har(path).resources) == urls


# -- HTML fallback -------------------------------------------------------------

@pytest.fixture(scope="module")
def http_fixture():
    pages = {
        "fix.test": '<html><script src="https://cdn.fix.test/a.js"></script>'
                    '<img src="/local.png"><link href="http://third.test/c.css">'
                    '<div data-src="https://nope.test/ignored"></div></html>',
        "bare.test": "<html><p>nothing here</p></html>",
    }
    fixture = start_http_server(pages)
    yield fixture
    fixture["server"].shutdown()


def _http_ctx(port, psl):
    return ProbeContext(resolver=None, psl=psl, ca_directory={},
                        http_connect_map={"*": f"127.0.0.1:{port}"},
                        http_timeout=3)


def test_fallback_extracts_resources(http_fixture, psl):
    rs = fetch_resources_fallback("fix.test", _http_ctx(http_fixture["port"], psl))
    assert rs.source == "html-fallback"
    assert "https://cdn.fix.test/a.js" in rs.resources
    assert "http://fix.test/local.png" in rs.resources  # relative resolved
    assert "http://third.test/c.css" in rs.resources
    assert all("nope.test" not in u for u in rs.resources)


def test_fallback_empty_page_keeps_page_url(http_fixture, psl):
    rs = fetch_resources_fallback("bare.test", _http_ctx(http_fixture["port"], psl))
    assert rs.resources == ("http://bare.test/",)


def test_fallback_unreachable(psl):
    dead = free_port()  # allocated then released: nothing listens
    with pytest.raises(FetchFailed):
        fetch_resources_fallback("gone.test", _http_ctx(dead, psl))


# -- TLS -----------------------------------------------------------------------

def _tls_ctx(psl, port=None):
    ca_directory = load_ca_directory()
    connect = {"*": f"127.0.0.1:{port}"} if port else {}
    return ProbeContext(resolver=None, psl=psl, ca_directory=ca_directory,
                        connect_map=connect, tls_timeout=5)


def test_probe_tls_stapled(tls_workspace, psl):
    ctx = _tls_ctx(psl, tls_workspace["stapled_port"])
    facts = probe_tls("fix.test", ctx)
    assert facts.https_supported
    assert set(facts.san_list) == {"fix.test", "*.fix.test"}
    assert facts.ca_name == "Fixture CA Org"
    assert facts.ocsp_stapled is True


def test_probe_tls_not_stapled(tls_workspace, psl):
    ctx = _tls_ctx(psl, tls_workspace["plain_port"])
    facts = probe_tls("fix.test", ctx)
    assert facts.https_supported
    assert facts.ocsp_stapled is False


def test_probe_tls_no_listener(psl):
    ctx = _tls_ctx(psl, free_port())
    with pytest.raises(ConnectionError):
        probe_tls("fix.test", ctx)


def test_probe_tls_plain_http_means_http_only(http_fixture, psl):
    # TCP connects but the peer speaks HTTP, not TLS
    ctx = _tls_ctx(psl, http_fixture["port"])
    facts = probe_tls("fix.test", ctx)
    assert facts.https_supported is False
    assert facts.san_list == ()
    assert facts.ca_name is None and facts.ca_url is None
    assert facts.ocsp_stapled is False


# -- probe_site ------------------------------------------------------------------

def _site_ctx(dns_stub, psl, tls_port=None, http_port=None, har_dir=None):
    return ProbeContext(
        resolver=Resolver(dns_stub.address, timeout=2, retries=0),
        psl=psl, ca_directory=load_ca_directory(), har_dir=har_dir,
        connect_map={"*": f"127.0.0.1:{tls_port or free_port()}"},
        http_connect_map={"*": f"127.0.0.1:{http_port or free_port()}"},
        tls_timeout=3, http_timeout=3)


def test_probe_site_full_fixture(dns_stub, tls_workspace, http_fixture, psl, tmp_path):
    har_dir = tmp_path / "har"
    har_dir.mkdir()
    (har_dir / "fix.test.har").write_text(json.dumps(_har(
        ["https://fix.test/", "https://a.fix.test/app.js"])))
    ctx = _site_ctx(dns_stub, psl, tls_port=tls_workspace["stapled_port"],
                    har_dir=har_dir)
    result = probe_site(SiteRecord("fix.test", "US", 1), ctx)
    assert result.errors == []
    assert result.dns.nameservers == ("ns1.fix.test", "ns2.fix.test")
    assert result.tls.https_supported and result.tls.ocsp_stapled
    assert result.resources.source == "har-import"
    assert result.cnames["a.fix.test"].chain == ("b.fix.test", "c.cdn.test")
    # auxiliary SOA facts cover the chain names
    assert result.soa_authorities["c.cdn.test"] == "cdndns.test"


def test_probe_site_dead_dns_live_http(dns_stub, http_fixture, psl):
    # domain unknown to the stub: DNS fails, HTTP fallback still works
    ctx = _site_ctx(dns_stub, psl, http_port=http_fixture["port"])
    result = probe_site(SiteRecord("bare.test", "US", 2), ctx)
    stages = {stage for stage, _ in result.errors}
    assert "dns" in stages
    assert result.dns is None
    assert result.resources is not None
    assert result.resources.source == "html-fallback"


def test_probe_site_fully_dead(dns_stub, psl):
    ctx = _site_ctx(dns_stub, psl)
    result = probe_site(SiteRecord("gone.test", "US", 3), ctx)
    stages = {stage for stage, _ in result.errors}
    assert {"dns", "tls", "resources"} <= stages
    assert result.tls.https_supported is False


def test_probe_results_normalized(dns_stub, tls_workspace, psl, tmp_path):
    # mixed-case HAR urls and stub names come back lowercase, no trailing dot
    har_dir = tmp_path / "har2"
    har_dir.mkdir()
    (har_dir / "fix.test.har").write_text(json.dumps(_har(["https://A.FIX.test/x"])))
    ctx = _site_ctx(dns_stub, psl, tls_port=tls_workspace["plain_port"], har_dir=har_dir)
    result = probe_site(SiteRecord("FIX.test", "US", 4), ctx)
    assert result.site.domain == "fix.test"
    for ns in result.dns.nameservers:
        assert ns == ns.lower() and not ns.endswith(".")
    for host, chain in result.cnames.items():
        assert host == host.lower()
        for name in chain.chain:
            assert name == name.lower() and not name.endswith(".")


def test_probe_result_serialization_roundtrip(dns_stub, tls_workspace, psl):
    from webdeps.probe import ProbeResult
    ctx = _site_ctx(dns_stub, psl, tls_port=tls_workspace["plain_port"])
    result = probe_site(SiteRecord("fix.test", "US", 5), ctx)
    again = ProbeResult.from_dict(json.loads(json.dumps(result.to_dict())))
    assert again.to_dict() == result.to_dict()

"""Shared fixtures: a stub DNS server, TLS fixture servers (with and
without OCSP stapling), an SNI-dispatching TLS server for multi-site
corpora, and a tiny HTTP server for the HTML fallback.

The stub DNS server packs wire format by hand (struct only) so the
client under test is checked against independently-built bytes.
"""

import http.server
import socket
import ssl
import struct
import subprocess
import threading
import time
from pathlib import Path

import pytest

from webdeps.psl import load_default_psl


def free_port() -> int:
    s = socket.socket()
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
    s.close()
    return port


def wait_port(port: int, timeout: float = 5.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        try:
            socket.create_connection(("127.0.0.1", port), timeout=0.2).close()
            return
        except OSError:
            time.sleep(0.05)
    raise RuntimeError(f"port {port} never came up")


# --------------------------------------------------------------------------
# stub DNS server
# --------------------------------------------------------------------------

_QT = {1: "A", 2: "NS", 5: "CNAME", 6: "SOA"}


def _pack_name(name: str) -> bytes:
    out = bytearray()
    if name:
        for label in name.rstrip(".").split("."):
            raw = label.encode("ascii")
            out.append(len(raw))
            out += raw
    out.append(0)
    return bytes(out)


def _pack_rr(name: str, rtype: int, rdata: bytes, ttl: int = 60) -> bytes:
    return _pack_name(name) + struct.pack("!HHIH", rtype, 1, ttl, len(rdata)) + rdata


def _soa_rdata(mname: str) -> bytes:
    return (_pack_name(mname) + _pack_name("hostmaster." + mname)
            + struct.pack("!IIIII", 1, 3600, 600, 86400, 60))


class StubDnsServer:
    """Serves a dict-configured zone over UDP and TCP on one port.

    zone = {
      "ns":    {"site.test": ["ns1.site.test", ...]},
      "soa":   {"site.test": "dnshost.example"},      # value = SOA MNAME
      "cname": {"x.site.test": "y.cdn.test"},
      "a":     {"y.cdn.test": "127.0.0.1"},
    }
    Unknown names get NXDOMAIN; known names without the queried type get
    NODATA with the covering zone's SOA in the authority section.
    """

    def __init__(self, zone: dict):
        self.zone = {k: dict(v) for k, v in zone.items()}
        self.truncate_udp = set()  # names answered with TC=1 over UDP
        self.query_log = []
        self.port = free_port()
        self._udp = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._udp.bind(("127.0.0.1", self.port))
        self._tcp = socket.socket()
        self._tcp.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._tcp.bind(("127.0.0.1", self.port))
        self._tcp.listen(16)
        self._stop = threading.Event()
        self._threads = [threading.Thread(target=self._udp_loop, daemon=True),
                         threading.Thread(target=self._tcp_loop, daemon=True)]
        for t in self._threads:
            t.start()

    @property
    def address(self) -> str:
        return f"127.0.0.1:{self.port}"

    def close(self):
        self._stop.set()
        self._udp.close()
        self._tcp.close()

    def _known(self, name: str) -> bool:
        return any(name in table for table in self.zone.values())

    def _covering_soa(self, name: str):
        parts = name.split(".")
        for i in range(len(parts)):
            candidate = ".".join(parts[i:])
            if candidate in self.zone.get("soa", {}):
                return candidate, self.zone["soa"][candidate]
        return None

    def _respond(self, data: bytes, via_udp: bool) -> bytes:
        qid, _flags, qdcount = struct.unpack("!HHH", data[:6])
        pos = 12
        labels = []
        while data[pos]:
            n = data[pos]
            labels.append(data[pos + 1:pos + 1 + n].decode("ascii").lower())
            pos += 1 + n
        pos += 1
        qtype, qclass = struct.unpack("!HH", data[pos:pos + 4])
        question = data[12:pos + 4]
        name = ".".join(labels)
        self.query_log.append((name, _QT.get(qtype, qtype)))

        if via_udp and name in self.truncate_udp:
            header = struct.pack("!HHHHHH", qid, 0x8380, 1, 0, 0, 0)  # QR RD RA TC
            return header + question

        answers = b""
        authorities = b""
        ancount = nscount = 0
        rcode = 0

        kind = _QT.get(qtype)
        table = self.zone.get(kind.lower(), {}) if kind else {}
        if kind and name in table:
            values = table[name]
            if kind == "SOA":
                answers += _pack_rr(name, 6, _soa_rdata(values))
                ancount += 1
            elif kind == "A":
                for v in ([values] if isinstance(values, str) else values):
                    answers += _pack_rr(name, 1, socket.inet_aton(v))
                    ancount += 1
            else:
                rtype = 2 if kind == "NS" else 5
                for v in ([values] if isinstance(values, str) else values):
                    answers += _pack_rr(name, rtype, _pack_name(v))
                    ancount += 1
        elif self._known(name):
            covering = self._covering_soa(name)
            if covering:
                zone_name, mname = covering
                authorities += _pack_rr(zone_name, 6, _soa_rdata(mname))
                nscount += 1
        else:
            rcode = 3  # NXDOMAIN

        flags = 0x8580 | rcode  # QR AA RD RA
        header = struct.pack("!HHHHHH", qid, flags, 1, ancount, nscount, 0)
        return header + question + answers + authorities

    def _udp_loop(self):
        while not self._stop.is_set():
            try:
                data, addr = self._udp.recvfrom(4096)
            except OSError:
                return
            try:
                self._udp.sendto(self._respond(data, via_udp=True), addr)
            except (OSError, ValueError, struct.error):
                continue

    def _tcp_loop(self):
        while not self._stop.is_set():
            try:
                conn, _ = self._tcp.accept()
            except OSError:
                return
            try:
                with conn:
                    hdr = conn.recv(2)
                    if len(hdr) < 2:
                        continue
                    (length,) = struct.unpack("!H", hdr)
                    data = b""
                    while len(data) < length:
                        chunk = conn.recv(length - len(data))
                        if not chunk:
                            break
                        data += chunk
                    reply = self._respond(data, via_udp=False)
                    conn.sendall(struct.pack("!H", len(reply)) + reply)
            except (OSError, ValueError, struct.error):
                continue


# --------------------------------------------------------------------------
# TLS fixtures
# --------------------------------------------------------------------------

def _run(cmd, **kw):
    proc = subprocess.run(cmd, capture_output=True, **kw)
    if proc.returncode != 0:
        raise RuntimeError(f"{cmd[0]} failed: {proc.stderr.decode()[:400]}")
    return proc


def make_ca(directory: Path, org: str = "Fixture CA Org") -> dict:
    key = directory / "ca.key"
    cert = directory / "ca.pem"
    _run(["openssl", "req", "-x509", "-newkey", "ec", "-pkeyopt",
          "ec_paramgen_curve:prime256v1", "-nodes", "-keyout", str(key),
          "-out", str(cert), "-days", "3",
          "-subj", f"/O={org}/CN=Fixture Root"])
    return {"key": key, "cert": cert, "org": org}


def issue_cert(directory: Path, ca: dict, name: str, san_list, issuer_org=None) -> dict:
    """Issue a leaf cert for `name` with the given SAN entries."""
    safe = name.replace("*", "wild").replace(".", "_")
    key = directory / f"{safe}.key"
    csr = directory / f"{safe}.csr"
    cert = directory / f"{safe}.pem"
    ext = directory / f"{safe}.cnf"
    _run(["openssl", "req", "-newkey", "ec", "-pkeyopt",
          "ec_paramgen_curve:prime256v1", "-nodes", "-keyout", str(key),
          "-out", str(csr), "-subj", f"/CN={name}"])
    san = ",".join(f"DNS:{s}" for s in san_list)
    ext.write_text(f"subjectAltName={san}\n")
    _run(["openssl", "x509", "-req", "-in", str(csr), "-CA", str(ca["cert"]),
          "-CAkey", str(ca["key"]), "-CAcreateserial", "-days", "2",
          "-extfile", str(ext), "-out", str(cert)])
    return {"key": key, "cert": cert, "san": tuple(san_list)}


def make_ocsp_response(directory: Path, ca: dict, leaf: dict) -> Path:
    serial = _run(["openssl", "x509", "-in", str(leaf["cert"]), "-noout",
                   "-serial"]).stdout.decode().strip().split("=")[1]
    index = directory / "index.txt"
    index.write_text(f"V\t391231235959Z\t\t{serial}\tunknown\t/CN=fixture\n")
    resp = directory / "ocsp_resp.der"
    _run(["openssl", "ocsp", "-index", str(index), "-CA", str(ca["cert"]),
          "-rsigner", str(ca["cert"]), "-rkey", str(ca["key"]),
          "-issuer", str(ca["cert"]), "-cert", str(leaf["cert"]),
          "-respout", str(resp), "-no_nonce"])
    return resp


def start_s_server(leaf: dict, status_file: Path = None) -> dict:
    port = free_port()
    cmd = ["openssl", "s_server", "-accept", str(port), "-cert", str(leaf["cert"]),
           "-key", str(leaf["key"]), "-www", "-quiet"]
    if status_file:
        cmd += ["-status_file", str(status_file)]
    proc = subprocess.Popen(cmd, stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
    wait_port(port)
    return {"proc": proc, "port": port}


class SniTlsServer(threading.Thread):
    """Stdlib TLS server that picks its certificate by SNI.

    Serves a canned HTTP response after the handshake; cannot staple
    OCSP (use start_s_server for stapled fixtures).
    """

    def __init__(self, certs: dict, default: dict):
        # certs: server_name -> {"cert": path, "key": path}
        super().__init__(daemon=True)
        self._contexts = {}
        for name, leaf in certs.items():
            ctx = ssl.SSLContext(ssl.PROTOCOL_TLS_SERVER)
            ctx.load_cert_chain(str(leaf["cert"]), str(leaf["key"]))
            self._contexts[name] = ctx
        self._default = ssl.SSLContext(ssl.PROTOCOL_TLS_SERVER)
        self._default.load_cert_chain(str(default["cert"]), str(default["key"]))
        self._default.sni_callback = self._sni
        for ctx in self._contexts.values():
            ctx.sni_callback = self._sni
        self._sock = socket.socket()
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind(("127.0.0.1", 0))
        self.port = self._sock.getsockname()[1]
        self._sock.listen(16)
        self._stop = threading.Event()
        self.start()

    def _sni(self, sslobj, server_name, ctx):
        if server_name and server_name in self._contexts:
            sslobj.context = self._contexts[server_name]
        return None

    def run(self):
        while not self._stop.is_set():
            try:
                conn, _ = self._sock.accept()
            except OSError:
                return
            threading.Thread(target=self._serve, args=(conn,), daemon=True).start()

    def _serve(self, conn):
        try:
            conn.settimeout(5)
            with self._default.wrap_socket(conn, server_side=True) as tls:
                try:
                    tls.recv(2048)
                except (OSError, ssl.SSLError):
                    pass
                try:
                    tls.sendall(b"HTTP/1.0 200 OK\r\nContent-Length: 2\r\n\r\nok")
                except (OSError, ssl.SSLError):
                    pass
        except (OSError, ssl.SSLError, ValueError):
            pass
        finally:
            try:
                conn.close()
            except OSError:
                pass

    def close(self):
        self._stop.set()
        self._sock.close()


# --------------------------------------------------------------------------
# HTTP fixture for the HTML fallback
# --------------------------------------------------------------------------

class HostPageHandler(http.server.BaseHTTPRequestHandler):
    pages = {}

    def do_GET(self):
        host = (self.headers.get("Host") or "").split(":")[0].lower()
        body = self.pages.get(host, self.pages.get("*", "<html></html>")).encode()
        self.send_response(200)
        self.send_header("Content-Type", "text/html")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


def start_http_server(pages: dict) -> dict:
    handler = type("Handler", (HostPageHandler,), {"pages": dict(pages)})
    server = http.server.ThreadingHTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return {"server": server, "port": server.server_address[1]}


# --------------------------------------------------------------------------
# shared fixtures
# --------------------------------------------------------------------------

@pytest.fixture(scope="session")
def psl():
    return load_default_psl()


@pytest.fixture(scope="session")
def tls_workspace(tmp_path_factory):
    """CA + two openssl s_server instances: stapling on and off, both
    serving a cert for fix.test with SAN {fix.test, *.fix.test}."""
    directory = tmp_path_factory.mktemp("tls")
    ca = make_ca(directory)
    leaf = issue_cert(directory, ca, "fix.test", ["fix.test", "*.fix.test"])
    resp = make_ocsp_response(directory, ca, leaf)
    stapled = start_s_server(leaf, status_file=resp)
    plain = start_s_server(leaf)
    ws = {"dir": directory, "ca": ca, "leaf": leaf,
          "stapled_port": stapled["port"], "plain_port": plain["port"]}
    yield ws
    for srv in (stapled, plain):
        srv["proc"].terminate()
        srv["proc"].wait()

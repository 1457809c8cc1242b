"""Minimal DNS client speaking RFC 1035 wire format over UDP with TCP
fallback on truncation.

Supports exactly what the probing pipeline needs: NS, SOA, CNAME and A
queries against a recursive resolver, with bounded retries and
exponential backoff. Name compression is handled on parse; queries are
always sent uncompressed.
"""

from __future__ import annotations

import random
import socket
import struct
import time
from dataclasses import dataclass, field

from .errors import ResolutionFailed

QTYPE = {"A": 1, "NS": 2, "CNAME": 5, "SOA": 6, "PTR": 12, "MX": 15, "TXT": 16, "AAAA": 28}
RCODE_NAMES = {0: "NOERROR", 1: "FORMERR", 2: "SERVFAIL", 3: "NXDOMAIN", 4: "NOTIMP", 5: "REFUSED"}

_MAX_POINTER_JUMPS = 64


def encode_name(name: str) -> bytes:
    out = bytearray()
    name = name.rstrip(".")
    if name:
        for label in name.split("."):
            raw = label.encode("ascii", errors="strict") if label.isascii() else label.encode("idna")
            if not 0 < len(raw) < 64:
                raise ValueError(f"bad label {label!r} in {name!r}")
            out.append(len(raw))
            out.extend(raw)
    out.append(0)
    return bytes(out)


def parse_name(data: bytes, offset: int):
    """Decode a possibly-compressed name; returns (name, offset_after)."""
    labels = []
    jumps = 0
    end = None
    pos = offset
    while True:
        if pos >= len(data):
            raise ValueError("truncated name")
        length = data[pos]
        if length & 0xC0 == 0xC0:
            if pos + 1 >= len(data):
                raise ValueError("truncated pointer")
            target = ((length & 0x3F) << 8) | data[pos + 1]
            if end is None:
                end = pos + 2
            jumps += 1
            if jumps > _MAX_POINTER_JUMPS:
                raise ValueError("compression pointer loop")
            pos = target
        elif length == 0:
            if end is None:
                end = pos + 1
            return ".".join(labels), end
        else:
            if pos + 1 + length > len(data):
                raise ValueError("truncated label")
            labels.append(data[pos + 1:pos + 1 + length].decode("ascii", errors="replace").lower())
            pos += 1 + length


@dataclass
class ResourceRecord:
    name: str
    rtype: int
    rclass: int
    ttl: int
    data: object  # str target for NS/CNAME/PTR, SoaData for SOA, str for A/AAAA, bytes otherwise


@dataclass
class SoaData:
    mname: str
    rname: str
    serial: int
    refresh: int
    retry: int
    expire: int
    minimum: int


@dataclass
class DnsResponse:
    qid: int
    rcode: int
    flags: int
    question: tuple  # (name, qtype)
    answers: list = field(default_factory=list)
    authorities: list = field(default_factory=list)
    additionals: list = field(default_factory=list)

    @property
    def rcode_name(self) -> str:
        return RCODE_NAMES.get(self.rcode, str(self.rcode))

    @property
    def truncated(self) -> bool:
        return bool(self.flags & 0x0200)

    def answer_records(self, rtype_name: str):
        rtype = QTYPE[rtype_name]
        return [rr for rr in self.answers if rr.rtype == rtype]


def build_query(name: str, rtype_name: str, qid: int) -> bytes:
    flags = 0x0100  # RD
    header = struct.pack("!HHHHHH", qid, flags, 1, 0, 0, 0)
    return header + encode_name(name) + struct.pack("!HH", QTYPE[rtype_name], 1)


def _parse_rr(data: bytes, pos: int):
    name, pos = parse_name(data, pos)
    if pos + 10 > len(data):
        raise ValueError("truncated record header")
    rtype, rclass, ttl, rdlength = struct.unpack("!HHIH", data[pos:pos + 10])
    pos += 10
    rdata_start = pos
    if pos + rdlength > len(data):
        raise ValueError("truncated rdata")
    if rtype in (QTYPE["NS"], QTYPE["CNAME"], QTYPE["PTR"]):
        value, _ = parse_name(data, rdata_start)
    elif rtype == QTYPE["SOA"]:
        mname, p = parse_name(data, rdata_start)
        rname, p = parse_name(data, p)
        serial, refresh, retry, expire, minimum = struct.unpack("!IIIII", data[p:p + 20])
        value = SoaData(mname, rname, serial, refresh, retry, expire, minimum)
    elif rtype == QTYPE["A"] and rdlength == 4:
        value = socket.inet_ntoa(data[rdata_start:rdata_start + 4])
    elif rtype == QTYPE["AAAA"] and rdlength == 16:
        value = socket.inet_ntop(socket.AF_INET6, data[rdata_start:rdata_start + 16])
    else:
        value = data[rdata_start:rdata_start + rdlength]
    return ResourceRecord(name, rtype, rclass, ttl, value), rdata_start + rdlength


def parse_message(data: bytes) -> DnsResponse:
    if len(data) < 12:
        raise ValueError("message shorter than header")
    qid, flags, qdcount, ancount, nscount, arcount = struct.unpack("!HHHHHH", data[:12])
    pos = 12
    qname, qtype = "", 0
    for _ in range(qdcount):
        qname, pos = parse_name(data, pos)
        qtype, _qclass = struct.unpack("!HH", data[pos:pos + 4])
        pos += 4
    resp = DnsResponse(qid=qid, rcode=flags & 0x000F, flags=flags, question=(qname, qtype))
    for section, count in ((resp.answers, ancount), (resp.authorities, nscount), (resp.additionals, arcount)):
        for _ in range(count):
            rr, pos = _parse_rr(data, pos)
            section.append(rr)
    return resp


def _system_resolver_address() -> str:
    try:
        with open("/etc/resolv.conf") as fh:
            for line in fh:
                parts = line.split()
                if len(parts) >= 2 and parts[0] == "nameserver":
                    return parts[1]
    except OSError:
        pass
    return "127.0.0.1"


def parse_server_address(server: str) -> tuple:
    """Accepts "host", "host:port" or "system"."""
    if server == "system":
        server = _system_resolver_address()
    if ":" in server and server.count(":") == 1:
        host, _, port = server.partition(":")
        return host, int(port)
    return server, 53


class Resolver:
    """Blocking stub resolver toward one recursive server.

    Retries `retries` extra times on timeout with exponential backoff
    starting at `backoff` seconds. NXDOMAIN/SERVFAIL/REFUSED raise
    ResolutionFailed immediately (they are authoritative outcomes, not
    transport glitches).
    """

    def __init__(self, server: str = "system", timeout: float = 3.0,
                 retries: int = 2, backoff: float = 1.0):
        self.address = parse_server_address(server)
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff

    def query(self, name: str, rtype_name: str) -> DnsResponse:
        last_exc = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            qid = random.randrange(0x10000)
            packet = build_query(name, rtype_name, qid)
            try:
                resp = self._exchange_udp(packet, qid)
                if resp.truncated:
                    resp = self._exchange_tcp(packet, qid)
            except socket.timeout:
                last_exc = ResolutionFailed(name, "TIMEOUT", f"attempt {attempt + 1}")
                continue
            except OSError as exc:
                last_exc = ResolutionFailed(name, "UNREACHABLE", str(exc))
                continue
            if resp.rcode == 0:
                return resp
            raise ResolutionFailed(name, resp.rcode_name, f"{rtype_name} query")
        raise last_exc

    def _exchange_udp(self, packet: bytes, qid: int) -> DnsResponse:
        with socket.socket(socket.AF_INET, socket.SOCK_DGRAM) as sock:
            sock.settimeout(self.timeout)
            sock.sendto(packet, self.address)
            deadline = time.monotonic() + self.timeout
            while True:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise socket.timeout()
                sock.settimeout(remaining)
                data, _addr = sock.recvfrom(4096)
                try:
                    resp = parse_message(data)
                except ValueError:
                    continue
                if resp.qid == qid:
                    return resp

    def _exchange_tcp(self, packet: bytes, qid: int) -> DnsResponse:
        with socket.create_connection(self.address, timeout=self.timeout) as sock:
            sock.settimeout(self.timeout)
            sock.sendall(struct.pack("!H", len(packet)) + packet)
            hdr = self._recv_exact(sock, 2)
            (length,) = struct.unpack("!H", hdr)
            data = self._recv_exact(sock, length)
        resp = parse_message(data)
        if resp.qid != qid:
            raise socket.timeout()
        return resp

    @staticmethod
    def _recv_exact(sock, n: int) -> bytes:
        buf = b""
        while len(buf) < n:
            chunk = sock.recv(n - len(buf))
            if not chunk:
                raise socket.timeout()
            buf += chunk
        return buf

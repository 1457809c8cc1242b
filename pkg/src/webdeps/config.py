"""Run configuration: a flat key=value file plus flag overrides.

Example config file::

    resolver = 8.8.8.8
    parallelism = 8
    concentration_threshold = 50
    store = ./snapshots
    har_dir = ./har
    rankings_dir = ./rankings
    global_list = ./rankings/global.txt
    indicators = ./data/indicators.csv
    groups = ./data/country_groups.csv
    connect.fix.test = 127.0.0.1:4433

Unset data-file paths fall back to the bundled defaults. Flags always
win over file values.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

from .dnsclient import Resolver
from .errors import DataError
from .probe import ProbeContext, RateLimiter
from .providers import CdnCnameMap, default_cdn_map_path, load_alias_table, load_ca_directory
from .psl import PublicSuffixList, default_psl_path

_DATA_DIR = Path(__file__).parent / "data"

_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def _parse_bool(value: str) -> bool:
    v = value.strip().lower()
    if v in _BOOL_TRUE:
        return True
    if v in _BOOL_FALSE:
        return False
    raise DataError(f"not a boolean: {value!r}")


@dataclass
class RunConfig:
    resolver: str = "system"
    parallelism: int = 4
    rate_limit: float = 0.0  # min seconds between operations per host
    concentration_threshold: int = 50
    psl: Optional[str] = None
    cdn_map: Optional[str] = None
    provider_aliases: Optional[str] = None
    ca_directory: Optional[str] = None
    indicators: Optional[str] = None
    groups: Optional[str] = None
    rankings_dir: Optional[str] = None
    global_list: Optional[str] = None
    har_dir: Optional[str] = None
    site_lists: Optional[str] = None
    site_list_format: str = "csv"
    offline: bool = False
    store: str = "./snapshots"
    dns_timeout: float = 3.0
    dns_retries: int = 2
    dns_backoff: float = 1.0
    tls_timeout: float = 10.0
    http_timeout: float = 10.0
    cname_depth: int = 8
    connect_map: dict = field(default_factory=dict)
    http_connect_map: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.parallelism < 1:
            raise DataError(f"parallelism must be >= 1, got {self.parallelism}")
        if self.concentration_threshold < 0:
            raise DataError("concentration_threshold must be >= 0")
        for key in ("psl", "cdn_map", "provider_aliases", "ca_directory",
                    "indicators", "groups", "global_list"):
            value = getattr(self, key)
            if value is not None and not Path(value).exists():
                raise DataError(f"config {key}={value}: file does not exist")
        for key in ("rankings_dir", "har_dir"):
            value = getattr(self, key)
            if value is not None and not Path(value).is_dir():
                raise DataError(f"config {key}={value}: directory does not exist")

    @classmethod
    def from_file(cls, path, overrides: dict = None) -> "RunConfig":
        values = {}
        connect = {}
        http_connect = {}
        p = Path(path)
        if not p.exists():
            raise DataError(f"config file not found: {p}")
        for ln, raw in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise DataError(f"{p}:{ln}: expected key = value")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key.startswith("http_connect."):
                http_connect[key[len("http_connect."):].lower()] = value
            elif key.startswith("connect."):
                connect[key[len("connect."):].lower()] = value
            else:
                values[key] = value
        return cls._build(values, connect, http_connect, overrides or {})

    @classmethod
    def defaults(cls, overrides: dict = None) -> "RunConfig":
        return cls._build({}, {}, {}, overrides or {})

    @classmethod
    def _build(cls, values: dict, connect: dict, http_connect: dict,
               overrides: dict) -> "RunConfig":
        merged = dict(values)
        for key, value in overrides.items():
            if value is not None:
                merged[key] = value
        kwargs = {"connect_map": connect, "http_connect_map": http_connect}
        known = {f.name: f.type for f in fields(cls)
                 if f.name not in ("connect_map", "http_connect_map")}
        converters = {"parallelism": int, "concentration_threshold": int,
                      "dns_retries": int, "rate_limit": float,
                      "dns_timeout": float, "dns_backoff": float,
                      "tls_timeout": float, "http_timeout": float,
                      "cname_depth": int, "offline": _parse_bool}
        for key, value in merged.items():
            if key not in known:
                raise DataError(f"unknown config key: {key}")
            if isinstance(value, str) and key in converters:
                try:
                    value = converters[key](value)
                except ValueError:
                    raise DataError(f"config {key}: bad value {value!r}")
            kwargs[key] = value
        return cls(**kwargs)

    def digest(self) -> str:
        parts = []
        for f in sorted(f.name for f in fields(self)):
            value = getattr(self, f)
            if isinstance(value, dict):
                value = ",".join(f"{k}:{v}" for k, v in sorted(value.items()))
            parts.append(f"{f}={value}")
        return hashlib.sha256("\n".join(parts).encode()).hexdigest()[:16]

    # -- loaded artifacts -----------------------------------------------------

    def load_psl(self) -> PublicSuffixList:
        return PublicSuffixList.from_path(self.psl or default_psl_path())

    def load_cdn_map(self) -> CdnCnameMap:
        return CdnCnameMap.from_path(self.cdn_map or default_cdn_map_path())

    def load_aliases(self) -> dict:
        return load_alias_table(self.provider_aliases)

    def load_ca_directory(self) -> dict:
        return load_ca_directory(self.ca_directory)

    def make_resolver(self) -> Resolver:
        return Resolver(self.resolver, timeout=self.dns_timeout,
                        retries=self.dns_retries, backoff=self.dns_backoff)

    def probe_context(self) -> ProbeContext:
        return ProbeContext(
            resolver=self.make_resolver(),
            psl=self.load_psl(),
            ca_directory=self.load_ca_directory(),
            har_dir=Path(self.har_dir) if self.har_dir else None,
            connect_map=dict(self.connect_map),
            http_connect_map=dict(self.http_connect_map),
            tls_timeout=self.tls_timeout,
            http_timeout=self.http_timeout,
            cname_depth=self.cname_depth,
            rate_limiter=RateLimiter(self.rate_limit),
        )

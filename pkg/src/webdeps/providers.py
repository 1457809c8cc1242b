"""Provider identity, CDN fingerprints, and the bundled lookup tables.

A "provider" throughout this package is the registrable domain of the
service hostname (nameserver, CA host, CNAME target). Display names for
well-known providers come from the alias table; CDN operators are
recognized by suffix fingerprints on CNAME targets.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

from .errors import DataError

_DATA_DIR = Path(__file__).parent / "data"


def _parse_tab_table(text: str, what: str) -> list:
    """Parse `key<TAB>value` lines, '#' comments and blanks ignored."""
    rows = []
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "\t" not in line:
            raise DataError(f"{what} line {ln}: expected key<TAB>value, got {line!r}")
        key, _, value = line.partition("\t")
        key, value = key.strip().lower(), value.strip()
        if not key or not value:
            raise DataError(f"{what} line {ln}: empty field")
        rows.append((key, value))
    return rows


class CdnCnameMap:
    """Suffix fingerprint table mapping CNAME targets to CDN operators.

    Lookup matches the longest suffix whose label boundary aligns:
    either whole-name equality or a match immediately after a dot, so
    "notcloudfront.net" never matches the "cloudfront.net" entry.
    """

    def __init__(self, entries):
        self.entries = []
        seen = set()
        for suffix, name in entries:
            suffix = suffix.lower().strip(".")
            if suffix in seen:
                raise DataError(f"duplicate CDN fingerprint suffix: {suffix}")
            seen.add(suffix)
            self.entries.append((suffix, name))

    @classmethod
    def from_text(cls, text: str) -> "CdnCnameMap":
        return cls(_parse_tab_table(text, "cdn map"))

    @classmethod
    def from_path(cls, path) -> "CdnCnameMap":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))

    def lookup(self, cname: str) -> Optional[str]:
        name = cname.lower().rstrip(".")
        best = None
        best_len = -1
        for suffix, cdn in self.entries:
            if name == suffix or name.endswith("." + suffix):
                if len(suffix) > best_len:
                    best, best_len = cdn, len(suffix)
        return best

    def cdn_names(self) -> set:
        return {name for _, name in self.entries}


def lookup_cdn(cname: str, cdn_map: CdnCnameMap) -> Optional[str]:
    return cdn_map.lookup(cname)


def load_alias_table(path=None) -> dict:
    """registrable-domain -> provider display name."""
    p = Path(path) if path else _DATA_DIR / "provider_aliases.txt"
    return dict(_parse_tab_table(p.read_text(encoding="utf-8"), "alias table"))


def load_ca_directory(path=None) -> dict:
    """TLS issuer organization (lowercased) -> canonical CA hostname."""
    p = Path(path) if path else _DATA_DIR / "ca_directory.txt"
    return dict(_parse_tab_table(p.read_text(encoding="utf-8"), "ca directory"))


def default_cdn_map_path() -> Path:
    return _DATA_DIR / "cdn_cname_map.txt"


def load_default_cdn_map() -> CdnCnameMap:
    return CdnCnameMap.from_path(default_cdn_map_path())


def display_name(provider: Optional[str], aliases: dict) -> Optional[str]:
    if provider is None:
        return None
    return aliases.get(provider, provider)

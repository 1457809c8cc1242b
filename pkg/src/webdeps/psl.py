"""Registrable-domain (eTLD+1) extraction against a public suffix list.

Implements the standard publicsuffix.org matching algorithm: exception
rules beat wildcard and plain rules, the longest rule wins, and an
unlisted TLD falls back to the implicit "*" rule. Two hostnames belong
to the same operator, for every heuristic in this package, exactly when
their registrable domains are equal.
"""

from __future__ import annotations

from pathlib import Path

from .errors import DataError, MalformedHostname, SuffixOnly

_ALLOWED_EXTRA = {"-", "_"}
_MAX_NAME = 253
_MAX_LABEL = 63


def normalize_hostname(hostname: str) -> str:
    """Lowercase, strip one trailing dot, and validate label syntax."""
    if not isinstance(hostname, str):
        raise MalformedHostname(f"not a string: {hostname!r}")
    name = hostname.strip().lower()
    if name.endswith("."):
        name = name[:-1]
    if not name:
        raise MalformedHostname("empty hostname")
    if len(name) > _MAX_NAME:
        raise MalformedHostname(f"name too long ({len(name)} chars): {name[:40]}...")
    for label in name.split("."):
        if not label:
            raise MalformedHostname(f"empty label in {name!r}")
        if len(label) > _MAX_LABEL:
            raise MalformedHostname(f"label too long in {name!r}")
        for ch in label:
            if not (ch.isalnum() or ch in _ALLOWED_EXTRA):
                raise MalformedHostname(f"illegal character {ch!r} in {name!r}")
    return name


class PublicSuffixList:
    """Parsed suffix rules in the standard public_suffix_list.dat format."""

    def __init__(self, plain: set, wildcards: set, exceptions: set):
        # each entry is a tuple of labels, e.g. ("co", "uk")
        self._plain = frozenset(plain)
        self._wildcards = frozenset(wildcards)
        self._exceptions = frozenset(exceptions)

    def __len__(self):
        return len(self._plain) + len(self._wildcards) + len(self._exceptions)

    @classmethod
    def from_text(cls, text: str) -> "PublicSuffixList":
        plain, wildcards, exceptions = set(), set(), set()
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("//"):
                continue
            rule = line.split()[0].lower()
            if rule.startswith("!"):
                exceptions.add(tuple(rule[1:].split(".")))
            elif rule.startswith("*."):
                wildcards.add(tuple(rule[2:].split(".")))
            elif rule == "*":
                # implicit default rule; always in effect
                continue
            else:
                plain.add(tuple(rule.split(".")))
        if not (plain or wildcards or exceptions):
            raise DataError("public suffix list contains no rules")
        return cls(plain, wildcards, exceptions)

    @classmethod
    def from_path(cls, path) -> "PublicSuffixList":
        text = Path(path).read_text(encoding="utf-8")
        return cls.from_text(text)

    def _suffix_length(self, labels: tuple) -> int:
        """Number of labels in the public suffix of `labels`."""
        exception_len = 0
        best = 0
        n = len(labels)
        for i in range(n):
            suffix = labels[i:]
            if suffix in self._exceptions:
                exception_len = max(exception_len, len(suffix) - 1)
            if suffix in self._plain:
                best = max(best, len(suffix))
            if len(suffix) >= 2 and suffix[1:] in self._wildcards:
                best = max(best, len(suffix))
        if exception_len:
            return exception_len
        return best if best else 1  # implicit "*" rule

    def public_suffix(self, hostname: str) -> str:
        name = normalize_hostname(hostname)
        labels = tuple(name.split("."))
        return ".".join(labels[len(labels) - self._suffix_length(labels):])

    def is_public_suffix(self, hostname: str) -> bool:
        name = normalize_hostname(hostname)
        labels = tuple(name.split("."))
        return self._suffix_length(labels) == len(labels)

    def registrable_domain(self, hostname: str) -> str:
        """The public suffix plus one label (eTLD+1) of `hostname`."""
        name = normalize_hostname(hostname)
        labels = tuple(name.split("."))
        ps_len = self._suffix_length(labels)
        if len(labels) <= ps_len:
            raise SuffixOnly(f"{name!r} is a public suffix")
        return ".".join(labels[len(labels) - ps_len - 1:])


def registrable_domain(hostname: str, psl: PublicSuffixList) -> str:
    return psl.registrable_domain(hostname)


def provider_id(hostname: str, psl: PublicSuffixList):
    """Registrable domain as a grouping key, or None when none exists.

    Total function: malformed and suffix-only hostnames group as None
    instead of raising, so classification never aborts on odd CNAMEs.
    """
    try:
        return psl.registrable_domain(hostname)
    except (MalformedHostname, SuffixOnly):
        return None


def default_psl_path() -> Path:
    return Path(__file__).parent / "data" / "public_suffix_list.dat"


def load_default_psl() -> PublicSuffixList:
    return PublicSuffixList.from_path(default_psl_path())

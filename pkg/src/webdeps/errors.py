"""Exception hierarchy shared by all webdeps modules.

Three broad families matter to the CLI exit-code contract:
DataError (bad input or missing prerequisite), NetworkError (probing
failed outright) and StoreError (snapshot persistence failed).
"""


class WebdepsError(Exception):
    """Base class for every error raised by this package."""


class DataError(WebdepsError):
    """Malformed or missing input data."""


class NetworkError(WebdepsError):
    """A network stage failed completely."""


class StoreError(WebdepsError):
    """Snapshot store read/write failure."""


# foundation
class MalformedHostname(DataError):
    pass


class SuffixOnly(DataError):
    """The hostname is itself a public suffix; no registrable domain exists."""


# probe
class ResolutionFailed(NetworkError):
    """DNS resolution exhausted all retries.

    `kind` distinguishes NXDOMAIN, TIMEOUT, SERVFAIL, REFUSED, ...
    """

    def __init__(self, name: str, kind: str, detail: str = ""):
        self.name = name
        self.kind = kind
        msg = f"{name}: {kind}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class ChainTooLong(NetworkError):
    """CNAME chain exceeded the depth bound or looped."""


class MalformedHar(DataError):
    pass


class FetchFailed(NetworkError):
    pass


# classify
class EmptyNameserverSet(DataError):
    pass


# metrics
class EmptyCorpus(DataError):
    pass


class NoThirdPartySites(DataError):
    """Top-k coverage is undefined: no site has a third-party service of this kind."""


class ProbeUnavailable(DataError):
    """Indirect-dependency analysis needs probe facts that are not cached."""


# trends
class EmptyRegionalList(DataError):
    pass


class TooFewCountries(DataError):
    pass


class LengthMismatch(DataError):
    pass


class ZeroVariance(DataError):
    pass


class TooFewPoints(DataError):
    pass


class MissingIndicator(DataError):
    def __init__(self, indicator: str, countries: list):
        self.indicator = indicator
        self.countries = sorted(countries)
        super().__init__(f"no {indicator} value for: {', '.join(self.countries)}")


class EmptyGroup(DataError):
    pass


# cli_store
class MalformedRow(DataError):
    def __init__(self, path, line_no: int, reason: str):
        self.path = str(path)
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"{path}:{line_no}: {reason}")


class DuplicateRank(DataError):
    pass


class SnapshotNotFound(StoreError):
    pass


class StoreWriteFailed(StoreError):
    pass


class MissingPrerequisite(DataError):
    def __init__(self, stage: str):
        self.stage = stage
        super().__init__(f"missing prerequisite: run '{stage}' first")

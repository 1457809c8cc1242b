"""webdeps: measure third-party DNS/CA/CDN dependencies of ranked
websites and the centralization of those service markets per country."""

from .classify import (Classification, Rule, ServiceClassification,
                       ServiceKind, SiteDependencyReport, classify_ca,
                       classify_cdns, classify_dns, classify_site,
                       compute_concentration, find_service_type,
                       identify_internal_resources)
from .config import RunConfig
from .metrics import (CountryAggregate, IndirectDependencyReport,
                      aggregate_country, critical_rate, indirect_dependencies,
                      redundancy_rates, third_party_rate, top_k_coverage,
                      unknown_rate)
from .probe import (CnameChain, DnsFacts, ProbeContext, ProbeResult,
                    ResourceSet, ServiceHostFacts, SiteRecord, TlsFacts,
                    fetch_resources_fallback, ingest_har, probe_dns,
                    probe_site, probe_tls, resolve_cname_chain)
from .providers import CdnCnameMap, load_alias_table, load_ca_directory, lookup_cdn
from .psl import PublicSuffixList, load_default_psl, registrable_domain
from .sitelists import ingest_site_lists
from .store import SnapshotStore
from .trends import (CorrelationResult, RankedList, correlate, group_summary,
                     overlap_class, overlap_fraction, pearson)

__version__ = "0.1.0"

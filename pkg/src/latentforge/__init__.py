"""Evolutionary latent-space search for demographically balanced face datasets.

The package grows identity sets group by group: a simulated (or external)
oracle labels latent vectors, random sampling finds one seed per group, and
breadth-first outward mutation multiplies it far more cheaply than rejection
sampling ever could for rare groups. Manifests, checkpoints, and audits are
plain text and fully deterministic for a given seed.
"""

from .audit import (
    BalanceReport,
    UniquenessReport,
    accuracy_difference,
    balance_report,
    format_balance_report,
    format_uniqueness_report,
    parse_accuracy_table,
    uniqueness_report,
)
from .baseline import (
    EfficiencyReport,
    compare_efficiency,
    format_efficiency_table,
    rejection_sample,
)
from .config import RunConfig, make_handle, make_search_config, parse_run_config
from .errors import (
    CalibrationError,
    ConfigError,
    LatentForgeError,
    ManifestFormatError,
    OracleTimeoutError,
    ProtocolError,
    SeedNotFoundError,
    SpaceMismatchError,
    TransportError,
    UnsupportedAuditError,
)
from .external import PROTOCOL_VERSION, ExternalOracle
from .manifest_io import read_manifest, read_sidecar, write_manifest
from .model import (
    DEFAULT_GROUPS,
    DatasetManifest,
    GroupStats,
    IdentityRecord,
    LatentSpaceSpec,
    LatentVector,
    OracleVerdict,
    SearchConfig,
    VariationDirection,
    VariationSpec,
    config_fingerprint,
    quantize_array,
    quantize_value,
    validate_manifest,
)
from .oracle import (
    MixtureWorld,
    SimulatedOracle,
    build_world,
    calibrate_weights,
    default_world,
    evaluate,
    fitness,
    full_scale_world,
    load_world,
    measure_prior_mix,
    sample_prior,
    save_world,
)
from .rng import derive_seed, stream
from .search import (
    default_config,
    explore,
    expand_identity,
    find_seed,
    mutate,
    run_campaign,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "DEFAULT_GROUPS",
    "LatentSpaceSpec",
    "LatentVector",
    "SearchConfig",
    "OracleVerdict",
    "IdentityRecord",
    "VariationDirection",
    "VariationSpec",
    "GroupStats",
    "DatasetManifest",
    "validate_manifest",
    "config_fingerprint",
    "quantize_value",
    "quantize_array",
    "MixtureWorld",
    "SimulatedOracle",
    "ExternalOracle",
    "PROTOCOL_VERSION",
    "build_world",
    "default_world",
    "full_scale_world",
    "save_world",
    "load_world",
    "sample_prior",
    "measure_prior_mix",
    "calibrate_weights",
    "evaluate",
    "fitness",
    "find_seed",
    "mutate",
    "explore",
    "run_campaign",
    "expand_identity",
    "default_config",
    "derive_seed",
    "stream",
    "rejection_sample",
    "compare_efficiency",
    "format_efficiency_table",
    "EfficiencyReport",
    "accuracy_difference",
    "parse_accuracy_table",
    "uniqueness_report",
    "balance_report",
    "format_uniqueness_report",
    "format_balance_report",
    "UniquenessReport",
    "BalanceReport",
    "read_manifest",
    "write_manifest",
    "read_sidecar",
    "RunConfig",
    "parse_run_config",
    "make_handle",
    "make_search_config",
    "LatentForgeError",
    "SpaceMismatchError",
    "SeedNotFoundError",
    "CalibrationError",
    "TransportError",
    "ProtocolError",
    "OracleTimeoutError",
    "UnsupportedAuditError",
    "ManifestFormatError",
    "ConfigError",
]

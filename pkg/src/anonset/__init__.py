"""Transaction-graph analytics for fixed-denomination mixer pools.

The package quantifies how much anonymity a mixer pool really provides:
it replays deposits and withdrawals into exact signed balances, links
addresses through five behavioral heuristics plus side-channel evidence,
recovers withdrawal times from mining-reward claims, and measures the
resulting shrinkage of each pool's anonymity set.  A seeded synthetic
trace generator with planted ground truth makes every analysis verifiable
at desk scale.
"""

from .errors import (
    AnalysisError,
    ConfigError,
    DomainError,
    IngestError,
    InputError,
    ModeError,
)
from .ledger import (
    Address,
    Amount,
    BlockPosition,
    Flow,
    LinkPair,
    PoolConfig,
    PoolEvent,
    PoolState,
    Transfer,
    compute_balance,
    merge_pair,
    normalize_address,
    pool_state,
    simplify_state,
)
from .indexing import LabelBook, LedgerIndex, TransferCover, build_index
from .heuristics import (
    Cluster,
    HeuristicResult,
    clusters_from_links,
    combine,
    h1_reuse,
    h2_improper_sender,
    h3_related_pair,
    h4_intermediary,
    h5_cross_pool,
)
from .metrics import (
    AnonymityReport,
    adversary_advantage,
    advantage_increase_from_reduction,
    build_anonymity_report,
    cluster_size_histogram,
    fund_then_deposit_flags,
    observed_anonymity_set,
    relative_advantage_increase,
    relayer_usage,
    true_anonymity_set,
)
from .mining import (
    DEFAULT_AM_WEIGHTS,
    APClaim,
    LinkSolution,
    am_effect_on_h1,
    anonymity_points,
    classify_claimant,
    solve_multi_claim,
    solve_single_claim,
)
from .groundtruth import (
    FollowEdge,
    NameTransfer,
    SideChannelSet,
    SubdomainGrant,
    ValidationReport,
    airdrop_links,
    debank_negative_pairs,
    ens_subdomain_links,
    ens_transfer_links,
    score_links,
)
from .synth import (
    BehaviorProfile,
    GeneratorConfig,
    SynthTrace,
    generate_trace,
    standard_pools,
)
from .dataset import Dataset, ingest, write_dataset

__version__ = "0.1.0"

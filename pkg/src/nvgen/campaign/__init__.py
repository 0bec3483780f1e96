from nvgen.campaign.runner import (
    CampaignConfig,
    CorpusSanityFailure,
    classify_variant,
    load_subject,
    run_campaign,
)
from nvgen.campaign.stats import (
    BadLevel,
    DivisionUndefined,
    EmptySample,
    binomial_ci,
    compute_nvr,
    wilcoxon_rank_sum,
)

__all__ = [
    "CampaignConfig", "CorpusSanityFailure", "classify_variant", "load_subject", "run_campaign",
    "BadLevel", "DivisionUndefined", "EmptySample", "binomial_ci", "compute_nvr", "wilcoxon_rank_sum",
]

"""Hybrid statement-level fault localization.

SBFL suspiciousness scores are multiplied by per-statement-type priorities
learned from a fault repository; ranking quality is measured as Absolute
Wasted Effort under take-one-out cross-validation.
"""

from hybridfl.evaluation import EvalReport, awe, per_type_breakdown, relative_reduction, take_one_out
from hybridfl.learner import (
    Aggregation,
    LearnerConfig,
    PriorityModel,
    collect_type_stats,
    learn,
    report_error_proneness,
)
from hybridfl.model import (
    CoverageSpectrum,
    FaultRepository,
    FaultyVersion,
    Outcome,
    Project,
    StatementInfo,
    Tally,
    TestRecord,
    suspicious_set,
    tally,
)
from hybridfl.ranker import RankedEntry, SortingMode, TiePolicy, rank
from hybridfl.sbfl import Formula, score

__version__ = "0.1.0"

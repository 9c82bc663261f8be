"""Black-box importance maps by input partition and output aggregation.

Partition an input into parts, preserve one part at a time while masking the
rest, score each majority-masked input with an opaque model, and aggregate
the per-part scores into a per-element importance map.
"""

from .engine import (
    ExplainResult,
    ExplanationError,
    explain,
    explain_segment,
    explain_segment_once,
    explain_window,
)
from .estimators import SegmentExplainer, WindowExplainer
from .masking import MaskStyle, blur, compose_masked, gaussian_kernel_1d, make_background
from .metrics import GroundTruthRegion, InsertionResult, hit_rate, insertion, pointing_game
from .scorers import (
    BlobScorer,
    ConstantScorer,
    HttpScorer,
    KeywordScorer,
    LinearScorer,
    Scorer,
    ScorerSpec,
    ScoringError,
    StdioScorer,
    build_scorer,
    parse_scorer_arg,
)
from .segmentation import (
    SegmenterConfig,
    felzenszwalb,
    seeds,
    segment,
    slic,
    sweep_configs,
    watershed,
)
from .text import TokenSequence, explain_tokens, partition_tokens
from .types import (
    Image,
    ImportanceMap,
    PartMask,
    ScoreVector,
    Segmentation,
    WindowConfig,
    argmax_class,
    image_from_8bit,
)
from .validation import as_image
from .windows import aggregate_window, window_centers, window_mask

__version__ = "0.1.0"

__all__ = [
    "Image",
    "ScoreVector",
    "PartMask",
    "Segmentation",
    "ImportanceMap",
    "WindowConfig",
    "image_from_8bit",
    "argmax_class",
    "MaskStyle",
    "gaussian_kernel_1d",
    "blur",
    "make_background",
    "compose_masked",
    "window_centers",
    "window_mask",
    "aggregate_window",
    "SegmenterConfig",
    "felzenszwalb",
    "slic",
    "watershed",
    "seeds",
    "segment",
    "sweep_configs",
    "Scorer",
    "ScorerSpec",
    "ScoringError",
    "ConstantScorer",
    "BlobScorer",
    "LinearScorer",
    "KeywordScorer",
    "StdioScorer",
    "HttpScorer",
    "build_scorer",
    "parse_scorer_arg",
    "ExplainResult",
    "ExplanationError",
    "explain",
    "explain_window",
    "explain_segment",
    "explain_segment_once",
    "WindowExplainer",
    "SegmentExplainer",
    "TokenSequence",
    "partition_tokens",
    "explain_tokens",
    "GroundTruthRegion",
    "InsertionResult",
    "pointing_game",
    "hit_rate",
    "insertion",
    "as_image",
]

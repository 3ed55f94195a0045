"""groundtrack: tracking-by-detection, caption-based track retrieval, and
the grounding metric suite that scores both."""

from .model import (
    EMBED_DIM,
    Box,
    CaptionRecord,
    Detection,
    GroundTruthEntry,
    Query,
    Track,
    TrackState,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = [
    "EMBED_DIM",
    "Box",
    "CaptionRecord",
    "Detection",
    "GroundTruthEntry",
    "Query",
    "Track",
    "TrackState",
    "ValidationError",
    "__version__",
]

"""stpc: a compact hybrid video codec with deblocking-based spatial
refinement of motion-compensated prediction, plus RD measurement tooling."""

from .codec import (
    CodecConfig,
    CodewordError,
    EncodeResult,
    MagicError,
    Mode,
    StatsLog,
    StreamError,
    StreamHeader,
    TrailingDataError,
    TruncationError,
    VersionError,
    decode_sequence,
    encode_sequence,
    inloop_deblock,
    intra_dc_predict,
    mode_decide,
    read_header,
)
from .deblock import EdgeOctet, FilterParams, derive_thresholds, filter_edge, filter_edges
from .frameio import (
    DimensionError,
    Frame,
    Plane,
    Sequence,
    Y4MError,
    read_y4m,
    sample_at,
    write_y4m,
)
from .metrics import LOSSLESS, RDCurve, RDPoint, bd_metrics, psnr, read_rd_csv, write_rd_csv
from .motion import (
    MotionVector,
    Partition,
    PartitionKind,
    choose_partition,
    full_search,
    motion_compensate,
    sad,
    search_partitions,
)
from .refine import EdgeTask, NeighborContext, Orientation, boundary_schedule, refine_block

__version__ = "0.1.0"

__all__ = [
    "CodecConfig", "CodewordError", "DimensionError", "EdgeOctet", "EdgeTask",
    "EncodeResult", "FilterParams", "Frame", "LOSSLESS", "MagicError", "Mode",
    "MotionVector", "NeighborContext", "Orientation", "Partition",
    "PartitionKind", "Plane", "RDCurve", "RDPoint", "Sequence", "StatsLog",
    "StreamError", "StreamHeader", "TrailingDataError", "TruncationError",
    "VersionError", "Y4MError", "bd_metrics", "boundary_schedule",
    "choose_partition", "decode_sequence", "derive_thresholds",
    "encode_sequence", "filter_edge", "filter_edges", "full_search",
    "inloop_deblock", "intra_dc_predict", "mode_decide", "motion_compensate",
    "psnr", "read_header", "read_rd_csv", "read_y4m", "refine_block", "sad",
    "sample_at", "search_partitions", "write_rd_csv", "write_y4m",
]

"""Point-cloud ingestion, map persistence, pair labeling, and swathes."""

from .cloud import CLOUD_FORMATS, detect_format, load_cloud, save_cloud_xyz
from .labels import MATCH, MATCH_RADIUS, NON_MATCH, NON_MATCH_RADIUS, PairLabel, generate_pair_labels
from .segment_map import MAP_VERSION, SegmentMap, load_map, save_map
from .swathe import SWATHE_DISTANCE, SwatheAccumulator, accumulate_swathe

__all__ = [
    "CLOUD_FORMATS",
    "detect_format",
    "load_cloud",
    "save_cloud_xyz",
    "MATCH",
    "MATCH_RADIUS",
    "NON_MATCH",
    "NON_MATCH_RADIUS",
    "PairLabel",
    "generate_pair_labels",
    "MAP_VERSION",
    "SegmentMap",
    "load_map",
    "save_map",
    "SWATHE_DISTANCE",
    "SwatheAccumulator",
    "accumulate_swathe",
]

"""
Ethernet frames and full-duplex links
"""
from src.ether.frame import (
    BROADCAST,
    FE_BPS,
    GE_BPS,
    MAX_FRAME_BYTES,
    MIN_FRAME_BYTES,
    TENGE_BPS,
    Frame,
    FrameKind,
    MacAddress,
    VlanTag,
    fragment_sizes,
    multicast_group,
    serialization_delay,
)
from src.ether.link import Link, LinkDirection, assert_pause, release_pause

__all__ = [
    "BROADCAST", "FE_BPS", "GE_BPS", "TENGE_BPS", "MAX_FRAME_BYTES", "MIN_FRAME_BYTES",
    "Frame", "FrameKind", "MacAddress", "VlanTag", "fragment_sizes", "multicast_group",
    "serialization_delay", "Link", "LinkDirection", "assert_pause", "release_pause",
]

"""
DataFlow message envelope

Messages travel as raw Ethernet frames: a message larger than one frame is cut
into maximum-size frames plus a remainder frame and reassembled by fragment
index at the receiver. No IP stack is modelled.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from src.ether.frame import Frame, MacAddress, VlanTag, fragment_sizes
from src.sim_core.engine import SimTime

REQUEST_BYTES = 64


class MessageKind(str, Enum):
    ROI_ASSIGN = "roi_assign"          # L2SV -> L2PU
    DATA_REQUEST = "data_request"      # L2PU/SFI -> ROB/PROB
    FRAGMENT = "fragment"              # ROB/PROB -> requester
    ERROR_RESPONSE = "error_response"  # ROB/PROB -> requester
    DECISION = "decision"              # L2PU -> L2SV -> DFM
    DETAIL = "detail"                  # L2PU -> PROB
    BUILD = "build"                    # DFM -> SFI
    END_OF_EVENT = "end_of_event"      # SFI -> DFM
    CLEAR = "clear"                    # DFM -> ROBs, multicast


# measured flow per message kind, clear of source flow ids; multicast clears stay unmeasured
FLOW_ID_BASE = 1000
FLOW_IDS: Dict[MessageKind, int] = {
    kind: FLOW_ID_BASE + index + 1
    for index, kind in enumerate(MessageKind) if kind is not MessageKind.CLEAR
}


@dataclass
class Message:
    kind: MessageKind
    src: str
    dst: str
    event_id: int
    size_bytes: int = REQUEST_BYTES
    msg_id: int = 0
    body: Dict[str, Any] = field(default_factory=dict)
    socket: str = "default"


@dataclass(frozen=True)
class MessageFragment:
    """Frame payload: one piece of a message"""
    message: Message
    index: int
    count: int

    @property
    def socket(self) -> str:
        return self.message.socket


def to_frames(
    message: Message,
    src_mac: MacAddress,
    dst_mac: MacAddress,
    now: SimTime,
    tag: Optional[VlanTag] = None,
) -> List[Frame]:
    """Cut a message into frames carrying MessageFragment payloads"""
    sizes = fragment_sizes(message.size_bytes)
    flow_id = 0 if dst_mac.is_multicast else FLOW_IDS.get(message.kind, 0)
    return [
        Frame(
            src=src_mac,
            dst=dst_mac,
            size_bytes=size,
            tag=tag,
            flow_id=flow_id,
            injected_at=now,
            payload=MessageFragment(message, index, len(sizes)),
        )
        for index, size in enumerate(sizes)
    ]


class Reassembler:
    """Collects fragments per (sender, msg_id) until the message is complete"""

    def __init__(self):
        self._partial: Dict[Tuple[str, int], set] = {}
        self.completed = 0

    def accept(self, frame: Frame) -> Optional[Message]:
        piece = frame.payload
        if not isinstance(piece, MessageFragment):
            return None
        if piece.count == 1:
            self.completed += 1
            return piece.message
        key = (piece.message.src, piece.message.msg_id)
        seen = self._partial.setdefault(key, set())
        seen.add(piece.index)
        if len(seen) < piece.count:
            return None
        del self._partial[key]
        self.completed += 1
        return piece.message

    @property
    def incomplete(self) -> int:
        return len(self._partial)

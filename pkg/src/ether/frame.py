"""
Ethernet frame representation
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, List, Optional, Sequence

from src.utils.error_handler import ConfigurationError

MIN_FRAME_BYTES = 64
MAX_FRAME_BYTES = 1518
# preamble + start delimiter (8 B) and inter-frame gap (12 B)
FRAMING_OVERHEAD_BYTES = 20

FE_BPS = 10 ** 8
GE_BPS = 10 ** 9
TENGE_BPS = 10 ** 10


@dataclass(frozen=True, order=True)
class MacAddress:
    """48-bit MAC address"""
    value: int

    def __post_init__(self):
        if not 0 <= self.value < (1 << 48):
            raise ConfigurationError(f"MAC address out of range: {self.value:#x}")

    @classmethod
    def from_octets(cls, octets: Sequence[int]) -> "MacAddress":
        if len(octets) != 6 or any(not 0 <= o <= 255 for o in octets):
            raise ConfigurationError(f"MAC address needs six octets 0..255, got {list(octets)}")
        return cls(int.from_bytes(bytes(octets), "big"))

    @classmethod
    def parse(cls, text: str) -> "MacAddress":
        parts = text.replace("-", ":").split(":")
        try:
            octets = [int(p, 16) for p in parts]
        except ValueError as exc:
            raise ConfigurationError(f"Invalid MAC address '{text}'") from exc
        return cls.from_octets(octets)

    @property
    def octets(self) -> bytes:
        return self.value.to_bytes(6, "big")

    @property
    def is_multicast(self) -> bool:
        return bool(self.octets[0] & 0x01)

    @property
    def is_broadcast(self) -> bool:
        return self.value == (1 << 48) - 1

    def __str__(self) -> str:
        return ":".join(f"{o:02x}" for o in self.octets)


BROADCAST = MacAddress((1 << 48) - 1)
# MAC control (PAUSE) destination, never forwarded by a switch
MAC_CONTROL = MacAddress.parse("01:80:c2:00:00:01")


def multicast_group(group_id: int) -> MacAddress:
    """Locally administered multicast address for a group number"""
    return MacAddress.from_octets([0x03, 0x00, 0x5E, (group_id >> 16) & 0xFF,
                                   (group_id >> 8) & 0xFF, group_id & 0xFF])


@dataclass(frozen=True)
class VlanTag:
    """802.1Q tag"""
    vlan_id: int
    priority: int = 0

    def __post_init__(self):
        if not 1 <= self.vlan_id <= 4094:
            raise ConfigurationError(f"VLAN id must be in 1..4094, got {self.vlan_id}")
        if not 0 <= self.priority <= 7:
            raise ConfigurationError(f"VLAN priority must be in 0..7, got {self.priority}")


class FrameKind(Enum):
    DATA = "data"
    PAUSE = "pause"
    RESUME = "resume"
    MESSAGE = "message"

    @property
    def is_control(self) -> bool:
        return self in (FrameKind.PAUSE, FrameKind.RESUME)


@dataclass(frozen=True)
class Frame:
    """One Ethernet frame; size_bytes excludes preamble and inter-frame gap"""
    src: MacAddress
    dst: MacAddress
    size_bytes: int
    kind: FrameKind = FrameKind.DATA
    tag: Optional[VlanTag] = None
    flow_id: int = 0
    injected_at: int = 0
    seq: int = 0
    payload: Any = field(default=None, compare=False)

    def __post_init__(self):
        if not MIN_FRAME_BYTES <= self.size_bytes <= MAX_FRAME_BYTES:
            raise ConfigurationError(
                f"Frame size must be in {MIN_FRAME_BYTES}..{MAX_FRAME_BYTES}, got {self.size_bytes}"
            )
        if self.kind.is_control and (self.tag is not None or self.size_bytes != MIN_FRAME_BYTES):
            raise ConfigurationError("PAUSE/RESUME frames are untagged 64-byte frames")

    @property
    def priority(self) -> int:
        return self.tag.priority if self.tag else 0


def control_frame(src: MacAddress, kind: FrameKind, now: int) -> Frame:
    return Frame(src=src, dst=MAC_CONTROL, size_bytes=MIN_FRAME_BYTES, kind=kind, injected_at=now)


def serialization_delay(size_bytes: int, speed_bps: int) -> int:
    """
    Wire time of a frame including preamble and inter-frame gap

    Args:
        size_bytes: Frame size, 64..1518
        speed_bps: Line rate in bit/s

    Returns:
        Delay in ns, rounded to the nearest tick
    """
    if not MIN_FRAME_BYTES <= size_bytes <= MAX_FRAME_BYTES:
        raise ConfigurationError(
            f"Frame size must be in {MIN_FRAME_BYTES}..{MAX_FRAME_BYTES}, got {size_bytes}"
        )
    if speed_bps <= 0:
        raise ConfigurationError(f"Link speed must be positive, got {speed_bps}")
    bits_ns = (size_bytes + FRAMING_OVERHEAD_BYTES) * 8 * 10 ** 9
    return (2 * bits_ns + speed_bps) // (2 * speed_bps)


def fragment_sizes(message_bytes: int) -> List[int]:
    """
    Frame sizes carrying a message: maximum-size frames plus a remainder frame

    Args:
        message_bytes: Total on-wire size of the message

    Returns:
        List of frame sizes, each within 64..1518
    """
    if message_bytes <= 0:
        raise ConfigurationError(f"Message size must be positive, got {message_bytes}")
    full, rest = divmod(message_bytes, MAX_FRAME_BYTES)
    sizes = [MAX_FRAME_BYTES] * full
    if rest or not sizes:
        sizes.append(max(MIN_FRAME_BYTES, rest))
    return sizes

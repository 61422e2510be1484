"""
MAC address table with aging and two capacity models

``ideal``: at most ``capacity`` dynamic entries, new addresses are refused once full.
``hash_bucket``: the address bytes selected by ``key_octets`` pick one of
``bucket_count`` buckets holding ``bucket_depth`` entries each, so address
patterns that only vary outside the key collide into a single bucket.
"""
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, Hashable, List, Optional, Tuple

from src.ether.frame import MacAddress
from src.sim_core.engine import S, SimTime
from src.utils.error_handler import ConfigurationError

PortId = Hashable


class MacTableMode(str, Enum):
    IDEAL = "ideal"
    HASH_BUCKET = "hash_bucket"


@dataclass
class MacTableConfig:
    mode: MacTableMode = MacTableMode.IDEAL
    capacity: int = 16384
    key_octets: Tuple[int, ...] = (4, 5)
    bucket_count: int = 256
    bucket_depth: int = 70
    aging_time: SimTime = 300 * S

    def __post_init__(self):
        self.mode = MacTableMode(self.mode)
        if self.capacity < 1:
            raise ConfigurationError("MAC table capacity must be >= 1")
        if not self.key_octets or any(not 0 <= i <= 5 for i in self.key_octets):
            raise ConfigurationError(f"key_octets must be octet indices 0..5, got {self.key_octets}")
        if self.bucket_count < 1 or self.bucket_depth < 1:
            raise ConfigurationError("bucket_count and bucket_depth must be >= 1")
        if self.aging_time <= 0:
            raise ConfigurationError("aging_time must be positive")


@dataclass
class MacTableEntry:
    addr: MacAddress
    port: PortId
    vlan: int
    last_seen: SimTime
    static: bool = False


@dataclass
class MacTableStats:
    learned: int = 0
    refused: int = 0
    moves: int = 0
    aged_out: int = 0
    refreshed: int = 0


class MacTable:
    """Address-to-port table of one switch"""

    def __init__(
        self,
        config: Optional[MacTableConfig] = None,
        on_evict: Optional[Callable[[MacAddress], None]] = None,
    ):
        self.config = config or MacTableConfig()
        self.stats = MacTableStats()
        self._entries: Dict[Tuple[int, int], MacTableEntry] = {}
        self._bucket_fill: Counter = Counter()
        self._dynamic = 0
        self._on_evict = on_evict

    def bucket_of(self, addr: MacAddress) -> int:
        octets = addr.octets
        key = int.from_bytes(bytes(octets[i] for i in self.config.key_octets), "big")
        return key % self.config.bucket_count

    def _has_room(self, addr: MacAddress) -> bool:
        if self.config.mode is MacTableMode.IDEAL:
            return self._dynamic < self.config.capacity
        return self._bucket_fill[self.bucket_of(addr)] < self.config.bucket_depth

    def _expired(self, entry: MacTableEntry, now: SimTime) -> bool:
        return not entry.static and now - entry.last_seen > self.config.aging_time

    def learn(self, addr: MacAddress, vlan: int, port: PortId, now: SimTime) -> bool:
        """
        Learn or refresh a source address

        Returns:
            True if the address is in the table afterwards
        """
        if addr.is_multicast:
            return False
        key = (addr.value, vlan)
        entry = self._entries.get(key)
        if entry is not None and self._expired(entry, now):
            self._evict(key, entry)
            entry = None
        if entry is not None:
            if entry.static:
                return True
            if entry.port != port:
                entry.port = port
                self.stats.moves += 1
            entry.last_seen = now
            self.stats.refreshed += 1
            return True
        if not self._has_room(addr):
            self.stats.refused += 1
            return False
        self._entries[key] = MacTableEntry(addr, port, vlan, now)
        self._dynamic += 1
        self._bucket_fill[self.bucket_of(addr)] += 1
        self.stats.learned += 1
        return True

    def lookup(self, addr: MacAddress, vlan: int, now: SimTime) -> Optional[PortId]:
        """Port of a unicast address, or None when unknown or aged"""
        key = (addr.value, vlan)
        entry = self._entries.get(key)
        if entry is None:
            return None
        if self._expired(entry, now):
            self._evict(key, entry)
            return None
        return entry.port

    def add_static(self, addr: MacAddress, vlan: int, port: PortId) -> None:
        """Management-entered entry; never aged, not counted against capacity"""
        key = (addr.value, vlan)
        old = self._entries.get(key)
        if old is not None and not old.static:
            self._remove(key, old)
        self._entries[key] = MacTableEntry(addr, port, vlan, 0, static=True)

    def age_scan(self, now: SimTime) -> int:
        """Remove every dynamic entry idle for longer than aging_time"""
        stale = [(k, e) for k, e in self._entries.items() if self._expired(e, now)]
        for key, entry in stale:
            self._evict(key, entry)
        return len(stale)

    def clear(self) -> None:
        """Drop all dynamic entries"""
        for key, entry in [(k, e) for k, e in self._entries.items() if not e.static]:
            self._remove(key, entry)

    def _remove(self, key: Tuple[int, int], entry: MacTableEntry) -> None:
        del self._entries[key]
        if not entry.static:
            self._dynamic -= 1
            self._bucket_fill[self.bucket_of(entry.addr)] -= 1

    def _evict(self, key: Tuple[int, int], entry: MacTableEntry) -> None:
        self._remove(key, entry)
        self.stats.aged_out += 1
        if self._on_evict is not None:
            self._on_evict(entry.addr)

    def __len__(self) -> int:
        return self._dynamic

    def __contains__(self, item: Tuple[MacAddress, int]) -> bool:
        addr, vlan = item
        return (addr.value, vlan) in self._entries

    def entries(self) -> List[MacTableEntry]:
        return sorted(self._entries.values(), key=lambda e: (e.vlan, e.addr.value))

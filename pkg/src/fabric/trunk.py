"""
Trunk (link aggregation) group

Each unordered (src, dst) address pair is pinned to one member drawn at random,
so all frames of a connection use one physical link and keep their order.
"""
from collections import Counter
from typing import Dict, Hashable, List, Optional, Set, Tuple

from src.ether.frame import MacAddress
from src.sim_core.rng import RngStream
from src.utils.error_handler import ConfigurationError

PairKey = Tuple[int, int]


class TrunkGroup:
    """Logical port made of several physical ports"""

    def __init__(self, name: str, members: List[Hashable], rng: RngStream):
        if not members:
            raise ConfigurationError(f"Trunk {name} needs at least one member")
        self.name = name
        self.members = list(members)
        self.rng = rng
        self._up: Dict[Hashable, bool] = {m: True for m in self.members}
        self._assignment: Dict[PairKey, Hashable] = {}
        self._by_addr: Dict[int, Set[PairKey]] = {}
        self.dropped_all_down = 0
        self.reassigned = 0

    @staticmethod
    def pair_key(src: MacAddress, dst: MacAddress) -> PairKey:
        a, b = src.value, dst.value
        return (a, b) if a <= b else (b, a)

    def up_members(self) -> List[Hashable]:
        return [m for m in self.members if self._up[m]]

    def select(self, src: MacAddress, dst: MacAddress) -> Optional[Hashable]:
        """
        Member carrying the (src, dst) connection

        Returns:
            Member port, or None when every member is down (counted)
        """
        key = self.pair_key(src, dst)
        member = self._assignment.get(key)
        if member is not None and self._up[member]:
            return member
        candidates = self.up_members()
        if not candidates:
            self.dropped_all_down += 1
            return None
        if member is not None:
            self.reassigned += 1
        member = candidates[self.rng.integers(len(candidates))]
        self._assignment[key] = member
        self._by_addr.setdefault(key[0], set()).add(key)
        self._by_addr.setdefault(key[1], set()).add(key)
        return member

    def set_member_up(self, member: Hashable, up: bool) -> None:
        if member not in self._up:
            raise ConfigurationError(f"{member} is not a member of trunk {self.name}")
        self._up[member] = up

    def forget(self, addr: MacAddress) -> int:
        """Drop every connection involving an aged-out address"""
        keys = self._by_addr.pop(addr.value, set())
        for key in keys:
            self._assignment.pop(key, None)
            other = key[1] if key[0] == addr.value else key[0]
            peers = self._by_addr.get(other)
            if peers is not None:
                peers.discard(key)
                if not peers:
                    del self._by_addr[other]
        return len(keys)

    def connection_census(self) -> Dict[Hashable, int]:
        """Connections pinned to each member"""
        census = Counter(self._assignment.values())
        return {m: census.get(m, 0) for m in self.members}

    def __len__(self) -> int:
        return len(self._assignment)

"""
802.1Q port membership, ingress filtering and egress tagging
"""
import dataclasses
from dataclasses import dataclass, field
from typing import Dict, Hashable, Iterable, List, Optional, Set

from src.ether.frame import Frame, VlanTag
from src.utils.error_handler import ConfigurationError

DEFAULT_VLAN = 1


@dataclass
class PortVlans:
    """Membership of one port: untagged members get the tag stripped on egress"""
    pvid: int = DEFAULT_VLAN
    tagged: Set[int] = field(default_factory=set)
    untagged: Set[int] = field(default_factory=set)

    def __post_init__(self):
        for vid in {self.pvid, *self.tagged, *self.untagged}:
            if not 1 <= vid <= 4094:
                raise ConfigurationError(f"VLAN id must be in 1..4094, got {vid}")
        if not self.tagged and not self.untagged:
            self.untagged = {self.pvid}

    @property
    def members(self) -> Set[int]:
        return self.tagged | self.untagged


class VlanMap:
    """VLAN membership of every port of a switch"""

    def __init__(self):
        self._ports: Dict[Hashable, PortVlans] = {}
        self._members: Dict[int, List[Hashable]] = {}
        self.rejects = 0

    def configure_port(
        self,
        port: Hashable,
        pvid: int = DEFAULT_VLAN,
        tagged: Iterable[int] = (),
        untagged: Optional[Iterable[int]] = None,
    ) -> PortVlans:
        """
        Set the membership of a port

        Args:
            port: Port id (logical port for trunks)
            pvid: VLAN assigned to untagged ingress frames
            tagged: VLANs carried tagged on this port
            untagged: VLANs carried untagged; defaults to {pvid} when no VLAN is given
        """
        config = PortVlans(pvid, set(tagged), set(untagged) if untagged is not None else set())
        if config.pvid not in config.members:
            config.untagged.add(config.pvid)
        self._ports[port] = config
        self._rebuild()
        return config

    def remove_port(self, port: Hashable) -> Optional[PortVlans]:
        config = self._ports.pop(port, None)
        self._rebuild()
        return config

    def _rebuild(self) -> None:
        members: Dict[int, List[Hashable]] = {}
        for port, config in self._ports.items():
            for vid in sorted(config.members):
                members.setdefault(vid, []).append(port)
        self._members = members

    def port(self, port: Hashable) -> PortVlans:
        config = self._ports.get(port)
        if config is None:
            config = self.configure_port(port)
        return config

    def admit(self, frame: Frame, port: Hashable) -> Optional[int]:
        """
        Ingress filter

        Returns:
            VLAN the frame belongs to, or None when rejected (counted)
        """
        config = self.port(port)
        if frame.tag is None:
            return config.pvid
        if frame.tag.vlan_id in config.members:
            return frame.tag.vlan_id
        self.rejects += 1
        return None

    def members(self, vlan: int) -> List[Hashable]:
        """Ports in a VLAN, in configuration order"""
        return self._members.get(vlan, [])

    def is_member(self, port: Hashable, vlan: int) -> bool:
        return vlan in self.port(port).members

    def egress_frame(self, frame: Frame, port: Hashable, vlan: int) -> Frame:
        """Frame as it leaves ``port``: tagged on tagged members, untagged otherwise"""
        if vlan in self.port(port).tagged:
            tag = VlanTag(vlan, frame.priority)
            if frame.tag == tag:
                return frame
            return dataclasses.replace(frame, tag=tag)
        if frame.tag is None:
            return frame
        return dataclasses.replace(frame, tag=None)

    def vlans(self) -> List[int]:
        return sorted(self._members)

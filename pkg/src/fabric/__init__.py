"""
Ethernet switch model: MAC learning, VLANs, egress scheduling, flow control, trunks
"""
from src.fabric.mac_table import MacTable, MacTableConfig, MacTableMode
from src.fabric.scheduler import SchedulerKind
from src.fabric.switch import IngressMode, Switch, SwitchConfig, SwitchPort
from src.fabric.trunk import TrunkGroup
from src.fabric.vlan import VlanMap

__all__ = [
    "MacTable", "MacTableConfig", "MacTableMode", "SchedulerKind", "IngressMode",
    "Switch", "SwitchConfig", "SwitchPort", "TrunkGroup", "VlanMap",
]

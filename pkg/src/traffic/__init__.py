"""
Traffic generators, sinks and the address table probe
"""
from src.traffic.probes import AddressPattern, ProbeResult, address_pattern, mac_probe
from src.traffic.sinks import Listener, Responder, SinkConfig
from src.traffic.sources import Destination, DestinationOrder, Pattern, SourceConfig, TrafficSource

__all__ = [
    "AddressPattern", "ProbeResult", "address_pattern", "mac_probe",
    "Listener", "Responder", "SinkConfig",
    "Destination", "DestinationOrder", "Pattern", "SourceConfig", "TrafficSource",
]

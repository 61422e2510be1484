"""
DataFlow applications and the host network stack they run on
"""
from src.dataflow.host import CreditGate, Emulation, Host, HostConfig, SendResult
from src.dataflow.messages import Message, MessageKind
from src.dataflow.system import DataflowConfig, DataflowSystem

__all__ = [
    "CreditGate", "Emulation", "Host", "HostConfig", "SendResult",
    "Message", "MessageKind", "DataflowConfig", "DataflowSystem",
]

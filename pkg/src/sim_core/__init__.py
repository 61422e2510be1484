"""
Discrete-event simulation core
"""
from src.sim_core.engine import SimEngine, Event, RunSummary, SimTime, NS, US, MS, S
from src.sim_core.rng import RngStream

__all__ = ["SimEngine", "Event", "RunSummary", "SimTime", "RngStream", "NS", "US", "MS", "S"]

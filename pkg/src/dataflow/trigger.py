"""
LVL1 trigger emulator

Injects events into the L2SV at a fixed or Poisson rate. Injection stops one
drain window before the end of the run so every event can terminate.
"""
from typing import List, Tuple

from src.sim_core.engine import S, SimEngine, SimTime


class Lvl1Trigger:
    def __init__(self, system, rate_hz: float, poisson: bool = True):
        self.system = system
        self.engine: SimEngine = system.engine
        self.rate_hz = rate_hz
        self.poisson = poisson
        self.rng = self.engine.rng("lvl1")
        self.injected = 0
        self.stop_at: SimTime = 0

    def start(self, until: SimTime) -> None:
        self.stop_at = until
        self.engine.schedule(self._gap(), "lvl1", self._fire)

    def _gap(self) -> SimTime:
        mean = S / self.rate_hz
        if self.poisson:
            return self.engine.now() + max(1, round(self.rng.exponential(mean)))
        return self.engine.now() + round(mean)

    def make_roi(self) -> List[Tuple[int, int]]:
        """Synthetic RoI: a uniformly sized random subset of the ROBs"""
        config = self.system.config
        n_robs = config.n_robs
        low = min(config.roi_min_robs, n_robs)
        high = min(config.roi_max_robs, n_robs)
        count = low + self.rng.integers(high - low + 1)
        chosen: List[int] = []
        while len(chosen) < count:
            rob = self.rng.integers(n_robs)
            if rob not in chosen:
                chosen.append(rob)
        return [(rob, config.fragment_bytes) for rob in sorted(chosen)]

    def _fire(self) -> None:
        now = self.engine.now()
        if now >= self.stop_at:
            return
        self.injected += 1
        config = self.system.config
        record = self.system.ledger.open(
            self.injected, self.make_roi(), config.n_robs * config.fragment_bytes, now
        )
        # detector readout into every ROB
        for rob in self.system.robs:
            rob.store(self.injected)
        self.system.l2sv.on_lvl1(record)
        self.engine.schedule(self._gap(), "lvl1", self._fire)

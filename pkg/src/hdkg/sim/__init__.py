"""Behavioral simulator of the accelerator's scheduling, caching, and cost."""

from .scheduler import Registry, ScheduleBatch, schedule_epoch, describe_payload
from .cache import Cache, CACHE_POLICIES
from .cost import CostConfig, SimReport, simulate, sweep_capacities, PRESETS

__all__ = [
    "Registry", "ScheduleBatch", "schedule_epoch", "describe_payload",
    "Cache", "CACHE_POLICIES",
    "CostConfig", "SimReport", "simulate", "sweep_capacities", "PRESETS",
]

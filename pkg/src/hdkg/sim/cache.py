"""Vertex hypervector cache with LRU, LFU, and Random replacement.

Capacity counts hypervector-sized slots (the on-chip UltraRAM budget).
Relation hypervectors never pass through here; the device keeps all of them
resident.  LFU evicts the least-frequently-used entry, breaking ties by
least-recent touch and then by lowest vertex id.  Random eviction draws from
the ``random-policy`` stream.
"""

from __future__ import annotations

import heapq
from collections import OrderedDict

from .. import rng

CACHE_POLICIES = ("lru", "lfu", "random")


class Cache:
    def __init__(self, capacity: int, policy: str = "lru", seed: int = 0):
        if capacity < 0:
            raise ValueError("capacity must be non-negative")
        if policy not in CACHE_POLICIES:
            raise ValueError(f"policy must be one of {CACHE_POLICIES}")
        self.capacity = capacity
        self.policy = policy
        self.hits = 0
        self.misses = 0
        self.evictions = 0
        self._clock = 0
        self._lru: OrderedDict[int, None] = OrderedDict()
        self._meta: dict[int, tuple[int, int]] = {}   # vid -> (freq, last_touch)
        self._heap: list[tuple[int, int, int]] = []   # (freq, last_touch, vid)
        self._slots: list[int] = []                   # random policy: resident vids
        self._pos: dict[int, int] = {}                # vid -> index into _slots
        self._gen = rng.stream(seed, "random-policy")

    @property
    def resident(self) -> set[int]:
        if self.policy == "lru":
            return set(self._lru)
        if self.policy == "lfu":
            return set(self._meta)
        return set(self._slots)

    def __len__(self) -> int:
        return len(self.resident)

    def access(self, vid: int) -> bool:
        """Touch one vertex; returns True on hit.  Misses insert (evicting if full)."""
        if self.policy == "lru":
            return self._access_lru(vid)
        if self.policy == "lfu":
            return self._access_lfu(vid)
        return self._access_random(vid)

    def _access_lru(self, vid):
        if vid in self._lru:
            self._lru.move_to_end(vid)
            self.hits += 1
            return True
        self.misses += 1
        if self.capacity == 0:
            return False
        if len(self._lru) >= self.capacity:
            self._lru.popitem(last=False)
            self.evictions += 1
        self._lru[vid] = None
        return False

    def _access_lfu(self, vid):
        self._clock += 1
        if vid in self._meta:
            freq, _ = self._meta[vid]
            self._meta[vid] = (freq + 1, self._clock)
            heapq.heappush(self._heap, (freq + 1, self._clock, vid))
            self.hits += 1
            return True
        self.misses += 1
        if self.capacity == 0:
            return False
        if len(self._meta) >= self.capacity:
            # Stale heap entries are skipped until one matches current metadata.
            while True:
                freq, touch, victim = heapq.heappop(self._heap)
                if self._meta.get(victim) == (freq, touch):
                    del self._meta[victim]
                    self.evictions += 1
                    break
        self._meta[vid] = (1, self._clock)
        heapq.heappush(self._heap, (1, self._clock, vid))
        return False

    def _access_random(self, vid):
        if vid in self._pos:
            self.hits += 1
            return True
        self.misses += 1
        if self.capacity == 0:
            return False
        if len(self._slots) >= self.capacity:
            idx = int(self._gen.integers(len(self._slots)))
            victim = self._slots[idx]
            last = self._slots.pop()
            if last != victim:
                self._slots[idx] = last
                self._pos[last] = idx
            del self._pos[victim]
            self.evictions += 1
        self._pos[vid] = len(self._slots)
        self._slots.append(vid)
        return False

    @property
    def hit_rate(self) -> float:
        total = self.hits + self.misses
        return self.hits / total if total else 0.0

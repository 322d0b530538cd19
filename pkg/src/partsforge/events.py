"""Run-time event counters for instrumentable events."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields


@dataclass
class EventCounters:
    non_leaf_calls: int = 0
    leaf_calls: int = 0
    code_ptrs_created: int = 0
    indirect_calls: int = 0
    data_ptr_loads_stores: int = 0

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"{f.name} must be non-negative")

    def as_dict(self) -> dict:
        return asdict(self)

    def __add__(self, other: "EventCounters") -> "EventCounters":
        return EventCounters(*(getattr(self, f.name) + getattr(other, f.name) for f in fields(self)))

    def scaled(self, k: int) -> "EventCounters":
        return EventCounters(*(getattr(self, f.name) * k for f in fields(self)))

"""Behavior trees and the excavator/dump-truck collaboration scenario."""

from .bt import (Action, BtNode, Condition, Repeat, Retry, Selector, Sequence,
                 TickStatus, bt_tick)
from .machines import (CrawlerState, ENERGY_GROUPS, G_MOON, MachineKind,
                       MachineModel)
from .scenario import (CYCLE_CSV_HEADER, CoordinationError, CycleMetrics,
                       ExcavationConfig, ExcavationWorld, RegionOutsideTerrain,
                       SiteOutsideTerrain, Stalled, build_loading_tree,
                       grade_surface, metrics_to_csv, run_cycles)

__all__ = [
    "Action", "BtNode", "CYCLE_CSV_HEADER", "Condition", "CoordinationError",
    "CrawlerState", "CycleMetrics", "ENERGY_GROUPS", "ExcavationConfig",
    "ExcavationWorld", "G_MOON", "MachineKind", "MachineModel",
    "RegionOutsideTerrain", "Repeat", "Retry", "Selector", "Sequence",
    "SiteOutsideTerrain", "Stalled", "TickStatus", "bt_tick",
    "build_loading_tree", "grade_surface", "metrics_to_csv", "run_cycles",
]

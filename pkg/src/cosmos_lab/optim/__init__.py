"""Optimizer step functions, schedules and parameter routing."""
from .adam import AdamState, adam_init, adam_step
from .config import ALGORITHMS, OptimizerConfig, ScheduleConfig, lr_at
from .cosmos import (Cosmos2State, CosmosState, cosmos2_init, cosmos2_step, cosmos_branches,
                     cosmos_init, cosmos_step)
from .muon import MuonState, muon_init, muon_step
from .routing import KINDS, Assignment, LayerOptimizer, build_layer_optimizers, route_params
from .soap import Soap1State, soap1_init, soap1_step

__all__ = [
    "ALGORITHMS", "KINDS", "AdamState", "Assignment", "Cosmos2State", "CosmosState",
    "LayerOptimizer", "MuonState", "OptimizerConfig", "ScheduleConfig", "Soap1State",
    "adam_init", "adam_step", "build_layer_optimizers", "cosmos2_init", "cosmos2_step",
    "cosmos_branches", "cosmos_init", "cosmos_step", "lr_at", "muon_init", "muon_step",
    "route_params", "soap1_init", "soap1_step",
]

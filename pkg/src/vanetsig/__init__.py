"""Closed-loop simulation of VANET-driven signal control under Sybil attack,
with trust-based filtering of vehicle reports."""
from .harness import ExperimentPlan, algorithm_ruleset, run_experiment
from .metrics import ClassificationCounts, RunResult
from .signals import Phase, SignalBank, SignalParams, SignalState, decide_phase
from .simulation import RunConfig, RunTrace, run
from .topology import Topology, default_topology
from .traffic import NetworkState, SimParams, ca_step
from .trust import DetectionParams, Rule, TrustLedger, filter_reports, update_trust
from .vanet import AttackConfig, ReportBatch, VehicleReport, generate_reports, inject_sybil

__version__ = "0.1.0"

__all__ = [
    "AttackConfig", "ClassificationCounts", "DetectionParams", "ExperimentPlan",
    "NetworkState", "Phase", "ReportBatch", "Rule", "RunConfig", "RunResult",
    "RunTrace", "SignalBank", "SignalParams", "SignalState", "SimParams", "Topology",
    "TrustLedger", "VehicleReport", "algorithm_ruleset", "ca_step", "decide_phase",
    "default_topology", "filter_reports", "generate_reports", "inject_sybil", "run",
    "run_experiment", "update_trust",
]

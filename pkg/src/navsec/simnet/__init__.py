"""Deterministic discrete-event simulation of navaids, clients and attackers."""

from ..scenario import Scenario, ScenarioInvalid
from .attackers import (BentPipe, DelayMeacon, Emission, Forger, KeyCompromise, Replay, Spoof,
                        attacker_bent_pipe, attacker_delay_meacon, attacker_replay, attacker_spoof,
                        capability_from_dict)
from .channel import Channel, arrival_time, arrival_time_linear
from .engine import TRACE_SCHEMA, Simulator, Trace, check_expectation, run, summarize
from .events import EventKind, EventQueue, SimEvent

__all__ = [
    "Scenario", "ScenarioInvalid", "BentPipe", "DelayMeacon", "Emission", "Forger", "KeyCompromise",
    "Replay", "Spoof", "attacker_bent_pipe", "attacker_delay_meacon", "attacker_replay", "attacker_spoof",
    "capability_from_dict", "Channel", "arrival_time", "arrival_time_linear", "TRACE_SCHEMA", "Simulator",
    "Trace", "check_expectation", "run", "summarize", "EventKind", "EventQueue", "SimEvent",
]

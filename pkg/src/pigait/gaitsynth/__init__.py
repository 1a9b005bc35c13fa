from .cycles import (EVENTS, FEET, N_TARGETS, SLOTS, EventError, GaitCycle, GaitEvents, TargetAngles,
                     extract_cycles, extract_targets)
from .synth import (Subject, TrialRecord, TrialSeeds, Variability, ZERO_VARIABILITY, make_subject,
                    synth_trajectory, synth_trial)
from .templates import JOINTS, GaitType, template_angle

__all__ = [
    "EVENTS", "FEET", "N_TARGETS", "SLOTS", "EventError", "GaitCycle", "GaitEvents", "TargetAngles",
    "extract_cycles", "extract_targets", "Subject", "TrialRecord", "TrialSeeds", "Variability",
    "ZERO_VARIABILITY", "make_subject", "synth_trajectory", "synth_trial", "JOINTS", "GaitType",
    "template_angle",
]

"""Spectator-qubit noise detection: simulation, graybox models, pulse optimization, classification."""
from .noise import NoiseProfileSpec, NoiseRealizationSet, generate, profile_spec, psd_eval
from .pulses import PulseSequence, clamp, random_pulse, zero_pulse
from .simulator import (CharacterizationSet, MeasurementBasisSet, build_dataset, default_basis,
                        simulate_measurements)

__version__ = "0.1.0"

"""Simulation, enumeration, fitting and sequence design for renewable
hairpin-seesaw DNA strand-displacement gates."""

__version__ = "0.1.0"

from .domains import Complex, DomainCatalog, DomainError, DomainSpec, Strand, canonicalize
from .motifs import (InjectionSchedule, MotifParams, build_hairpin_motif, build_or_case_schedule,
                     build_or_gate, build_renewal_schedule)
from .network import Reaction, ReactionNetwork

__all__ = [
    "Complex", "DomainCatalog", "DomainError", "DomainSpec", "Strand", "canonicalize",
    "InjectionSchedule", "MotifParams", "build_hairpin_motif", "build_or_case_schedule",
    "build_or_gate", "build_renewal_schedule", "Reaction", "ReactionNetwork",
]

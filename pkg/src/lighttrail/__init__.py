"""Light-trail wavelength scheduling on optical arrays and rings.

Stationary scheduling, online policies, lower-bound constructions, a ring
traffic generator and an experiment harness.
"""

from .core import (CAPACITY, Arrive, Depart, EventSequence, LightTrail, Schedule,
                   Transmission, class_of, geometry, link_congestion, validate_schedule)
from .online import OnlineEngine, run_online
from .stationary import schedule_stationary

__version__ = "0.1.0"

__all__ = [
    "CAPACITY", "Arrive", "Depart", "EventSequence", "LightTrail", "OnlineEngine",
    "Schedule", "Transmission", "class_of", "geometry", "link_congestion",
    "run_online", "schedule_stationary", "validate_schedule",
]

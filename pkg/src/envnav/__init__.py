"""Visual waypoint following for a simulated drone, learned by imitation."""

__version__ = "0.1.0"

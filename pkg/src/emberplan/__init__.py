"""Contract-checked hazard simulation, ensemble planning and replanning
under a wall-clock deadline, with an event-sourced service layer."""

__version__ = "0.1.0"

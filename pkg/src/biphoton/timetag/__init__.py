"""Time-tagged detection events: simulation, file formats and coincidence analysis."""

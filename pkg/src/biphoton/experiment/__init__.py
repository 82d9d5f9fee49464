"""Physical-unit layer: crystal configuration, temperature sweeps, fitting and exports."""

"""Pipeline entrypoints for experiment sweeps."""

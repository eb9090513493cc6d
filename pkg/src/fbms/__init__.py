"""Free-boundary minimal surfaces via half-harmonic boundary maps."""

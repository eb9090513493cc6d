"""Scenario registry, oracles and command-line entry point."""

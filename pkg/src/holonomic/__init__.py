"""Calculus of variations on discretized holonomic measures over the flat torus."""

"""Lattice NLS ground-state toolkit."""

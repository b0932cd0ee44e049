"""Core library for the lattice NLS toolkit."""

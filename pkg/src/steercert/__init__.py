"""Certification of measurement incompatibility and steering through
noncontextuality witnesses, with the conic solvers that back it."""

__version__ = "0.1.0"

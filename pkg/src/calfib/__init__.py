"""Numerical checks for calibrated fibrations on torus orbifolds and their resolutions."""

__version__ = "0.1.0"

__all__ = ["lattice", "forms", "orbifold", "metrics", "fibration", "volume", "mirror", "realalg",
           "elliptic", "suites", "config", "cli"]

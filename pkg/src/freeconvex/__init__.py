"""freeconvex: certified numerics for finite-dimensional matrix convex sets."""

__version__ = "0.1.0"

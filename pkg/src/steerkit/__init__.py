"""Two-way EPR steering certification for finite-dimensional bipartite states."""

__version__ = "0.1.0"

"""folijet: numerics for higher-order transverse jet bundles of foliations."""

__version__ = "0.1.0"

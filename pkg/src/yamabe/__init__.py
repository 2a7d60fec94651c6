"""Exact jet-level engine for the singular Yamabe problem and extrinsic
conformal invariants of hypersurfaces."""

__version__ = "0.1.0"

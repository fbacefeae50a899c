"""Split conformal prediction for tensor-valued spatio-temporal surrogates.

The package bundles three desk-scale PDE data generators, small MLP
surrogates trained from scratch, and a cell-wise inductive conformal
calibration layer with coverage diagnostics, all reproducible from seeds.
"""

__version__ = "0.1.0"

"""
ctnet - Channel-tensorized spatial-temporal convolution kernels.

A numpy kernel library for tensor separable convolutions over a factorized
channel dimension, tensor excitation gating, CT-Block/network assembly with
degeneration presets, an analytical cost model, receptive-field probing and
a toy video trainer.
"""

__version__ = "1.0.0"
__author__ = "ctnet Team"
__description__ = "Channel-tensorized video convolution kernels, cost model and toy trainer"

# Package information
__all__ = ["__version__", "__author__", "__description__"]

"""Simulation toolkit for low-resolution data converters in mmWave beamforming links.

Subpackages cover the additive quantization noise model and its SINR
formulas, OFDM link-level validation, transmit-chain spectral and EVM
compliance, RF front-end power budgeting, and a multi-cell downlink
Monte Carlo with OFDMA/SDMA scheduling.  The `lowresbf` console script
exposes preset experiments over all of them.
"""

__version__ = "0.1.0"

from . import quantizer, sinr, power, ofdm, txchain, network  # noqa: F401

"""Covariograms and convolution bodies of planar convex bodies."""

__version__ = "0.1.0"

"""brlab: desk-scale numerical laboratory for Bochner-Riesz means,
sparse bilinear-form domination, and Muckenhoupt-weighted estimates."""

__version__ = "0.1.0"

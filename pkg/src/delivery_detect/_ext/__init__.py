"""Compiled kernels. Import through :mod:`delivery_detect.kernels`, never directly."""

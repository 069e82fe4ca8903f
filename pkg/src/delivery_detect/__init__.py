"""Delivery detection for doorbell footage: motion proposals, an excited 3D
MobileNetV2 event classifier trained with an evidential objective, and
video-level evaluation."""
from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]

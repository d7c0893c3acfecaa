"""Two-stage garment transfer: shape GAN, end-to-end TPS alignment,
SPADE-conditioned appearance GAN, evaluation metrics, and serving."""

__version__ = "0.1.0"

"""Synthetic-data rendering ladder: renderer, learned shading, denoising,
GAN refinement and classifier benchmarks, all CPU-only and seed-deterministic."""

__version__ = "0.1.0"

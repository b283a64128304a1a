"""Conditional GAN synthesis for imbalanced tabular fault data.

Modules: ``numerics`` (MLPs, Adam, seeded RNG), ``data`` (CSV, scaling,
batching), ``genmodels`` (F2GAN / CGAN / WGAN-GP), ``fidelity`` (distribution
metrics), ``tstr`` (train-on-synthetic classifiers), ``scenario`` (fault
fixtures) and ``cli``.
"""
__version__ = "0.1.0"

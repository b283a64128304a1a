"""Conditional GANs for tabular data: losses, training and synthesis."""
from .io import ModelFormatError, load_model, save_model
from .losses import (adversarial_loss_g, corr_feedback, correlation_matrix,
                     discriminator_loss, generator_loss, mv_feedback,
                     wgan_gp_critic_loss)
from .models import (ConfigError, DiscriminatorModel, GanConfig, GeneratorModel,
                     TrainedGan, TrainingLog)
from .training import (TrainingDivergence, critic_objective, discriminator_objective,
                       generator_objective, synthesize_balanced, train)

__all__ = [
    "ConfigError", "DiscriminatorModel", "GanConfig", "GeneratorModel",
    "ModelFormatError", "TrainedGan", "TrainingDivergence", "TrainingLog",
    "adversarial_loss_g", "corr_feedback", "correlation_matrix", "critic_objective",
    "discriminator_loss", "discriminator_objective", "generator_objective", "generator_loss", "load_model", "mv_feedback",
    "save_model", "synthesize_balanced", "train", "wgan_gp_critic_loss",
]

"""Compact conditional adversarial model: networks, losses, training, checkpoints."""

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .gradcheck import discriminator_check, generator_check, grad_check, max_relative_error
from .losses import bce_with_logits, pix2pix_losses
from .networks import (
    PRESETS,
    PatchDiscriminator,
    UNetGenerator,
    build_discriminator,
    build_generator,
    discriminator_forward,
    generator_forward,
)
from .optim import Adam
from .train import TrainConfig, pair_to_tensors, scaled_load_size, segment, train, validation_l1

__all__ = [
    "Adam",
    "Checkpoint",
    "PRESETS",
    "PatchDiscriminator",
    "TrainConfig",
    "UNetGenerator",
    "bce_with_logits",
    "build_discriminator",
    "build_generator",
    "discriminator_check",
    "discriminator_forward",
    "generator_check",
    "generator_forward",
    "grad_check",
    "load_checkpoint",
    "max_relative_error",
    "pair_to_tensors",
    "pix2pix_losses",
    "save_checkpoint",
    "scaled_load_size",
    "segment",
    "train",
    "validation_l1",
]

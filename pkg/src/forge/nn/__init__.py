from .layers import (
    BatchNorm2D,
    Conv2D,
    Dense,
    LeakyReLU,
    MaxPool2,
    ReLU,
    UpsampleNearest2,
    softmax_xent,
)
from .models import ClassifierNet, DenoiserNet, DiscriminatorNet
from .optim import Adam
from .checkpoint import (
    CheckpointError,
    ModelCheckpoint,
    checkpoint_of,
    load_checkpoint,
    save_checkpoint,
)
from .train import (
    ClassifierConfig,
    TrainConfig,
    channel_stats,
    classifier_accuracy,
    denoiser_ssim,
    gradient_check,
    standardize,
    train_classifier_arrays,
    train_denoiser_arrays,
)

__all__ = [
    "Conv2D", "Dense", "BatchNorm2D", "MaxPool2", "UpsampleNearest2",
    "ReLU", "LeakyReLU", "softmax_xent",
    "DenoiserNet", "ClassifierNet", "DiscriminatorNet",
    "Adam", "ModelCheckpoint", "checkpoint_of", "save_checkpoint",
    "load_checkpoint", "CheckpointError",
    "TrainConfig", "ClassifierConfig", "train_denoiser_arrays",
    "train_classifier_arrays", "classifier_accuracy", "channel_stats",
    "standardize", "denoiser_ssim", "gradient_check",
]

"""Dataset generation, backpropagation, Adam and the training loop."""

from .config import TrainConfig
from .dataset import (DatasetIndex, Example, build_dataset, read_index, sample_example,
                      sample_lambda, subset, write_index)
from .gradcheck import GradCheckReport, check_model, gradient_check, random_model
from .loop import train
from .optim import AdamState, DivergenceError, adam_step, loss_and_grad, regression_loss

__all__ = [
    "AdamState", "DatasetIndex", "DivergenceError", "Example", "GradCheckReport",
    "TrainConfig", "adam_step", "build_dataset", "check_model", "gradient_check",
    "loss_and_grad", "random_model", "read_index", "regression_loss", "sample_example",
    "sample_lambda", "subset", "train", "write_index",
]

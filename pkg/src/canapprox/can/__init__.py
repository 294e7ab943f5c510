"""Context aggregation network: dilated convolutions at full resolution."""

from .config import (CanConfig, NormMode, dilation_schedule, layer_in_channels, param_count,
                     receptive_field)
from .conv import dilated_conv2d
from .model import CanModel, init_model, param_shapes, state_shapes
from .network import (Workspace, attach_aux_channels, backward, forward, forward_inference,
                      forward_train, lambda_code, one_hot)
from .norm import adaptive_norm, lrelu
from .serialize import (BadMagicError, ModelFormatError, NonFiniteValueError, TrailingDataError,
                        TruncatedStreamError, VersionMismatchError, deserialize_model,
                        load_model, save_model, serialize_model)

__all__ = [
    "BadMagicError", "CanConfig", "CanModel", "ModelFormatError", "NonFiniteValueError",
    "NormMode", "TrailingDataError", "TruncatedStreamError", "VersionMismatchError",
    "Workspace", "adaptive_norm", "attach_aux_channels", "backward", "deserialize_model",
    "dilated_conv2d", "dilation_schedule", "forward", "forward_inference", "forward_train",
    "init_model", "lambda_code", "layer_in_channels", "load_model", "lrelu", "one_hot",
    "param_count", "param_shapes", "receptive_field", "save_model", "serialize_model",
    "state_shapes",
]

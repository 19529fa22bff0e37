"""From-scratch sparse convolutional autoencoder."""
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .layers import (
    NumericalFault,
    batchnorm_backward,
    batchnorm_forward,
    conv2d_backward,
    conv2d_forward,
    conv2d_transpose_backward,
    conv2d_transpose_forward,
)
from .network import (
    CONFIGS,
    ForwardResult,
    LayerSpec,
    LossBreakdown,
    NetworkConfig,
    backward,
    canonical_config,
    compression_report,
    desk_config,
    encode_batch,
    forward,
    init_params,
    loss,
    shape_trace,
    tiny_config,
    trainable_keys,
)
from .training import AdamSettings, TrainResult, loss_curve_rows, train

__all__ = [
    "AdamSettings", "CONFIGS", "CheckpointError", "ForwardResult", "LayerSpec",
    "LossBreakdown", "NetworkConfig", "NumericalFault", "TrainResult",
    "backward", "batchnorm_backward", "batchnorm_forward", "canonical_config",
    "compression_report", "conv2d_backward", "conv2d_forward",
    "conv2d_transpose_backward", "conv2d_transpose_forward", "desk_config",
    "encode_batch", "forward", "init_params", "load_checkpoint", "loss",
    "loss_curve_rows", "save_checkpoint", "shape_trace", "tiny_config",
    "train", "trainable_keys",
]

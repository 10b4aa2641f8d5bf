from .gradcheck import grad_check
from .optim import Adam, TrainingDiverged
from .tensor import (
    KinkMonitor,
    Tensor,
    add,
    as_tensor,
    conv2d,
    dense,
    euclidean_rowwise,
    hinge,
    kink_monitor,
    l2_normalize_rows,
    matmul,
    maxpool2,
    mean_all,
    mul,
    neg,
    relu,
    reshape,
    softmax_cross_entropy,
    sum_all,
    sum_axis,
)

__all__ = [
    "Adam",
    "KinkMonitor",
    "Tensor",
    "TrainingDiverged",
    "add",
    "as_tensor",
    "conv2d",
    "dense",
    "euclidean_rowwise",
    "grad_check",
    "hinge",
    "kink_monitor",
    "l2_normalize_rows",
    "matmul",
    "maxpool2",
    "mean_all",
    "mul",
    "neg",
    "relu",
    "reshape",
    "softmax_cross_entropy",
    "sum_all",
    "sum_axis",
]

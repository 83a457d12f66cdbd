from .tensor import (
    Tensor,
    add,
    as_tensor,
    concat,
    cos,
    default_dtype,
    div,
    einsum,
    exp,
    getitem,
    is_grad_enabled,
    log,
    matmul,
    mean,
    mul,
    no_grad,
    precision,
    reshape,
    sin,
    sqrt,
    stack,
    sub,
    take_rows,
    tanh,
    transpose,
    tsum,
    where,
)
from .functional import dropout, gelu, l2_normalize, layer_norm, log_softmax, softmax
from .nn import FeedForward, LayerNorm, Linear, Module, parameter, trunc_normal
from .optim import Adam, AdamState, adam_step
from .checkpoint import load_tensors, read_manifest, save_tensors, write_manifest
from .gradcheck import check_gradients, numerical_grad, relative_error

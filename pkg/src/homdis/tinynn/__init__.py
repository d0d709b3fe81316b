"""Minimal deterministic neural kernel: MLP, BiLSTM, Adam, gradient checking."""

from .adam import AdamState
from .checkpoint import load_checkpoint, save_checkpoint
from .core import sigmoid, softmax
from .gradcheck import (
    GradCheckReport,
    GradOffender,
    check_bilstm_mlp_gradients,
    check_mlp_gradients,
    grad_check,
)
from .lstm import (
    BiLstmEncoder,
    LstmCell,
    bilstm_backward,
    bilstm_encode,
    bilstm_encode_cached,
    create_bilstm,
    create_lstm_cell,
)
from .mlp import (
    MlpModel,
    create_mlp,
    mlp_forward,
    mlp_logits,
    mlp_loss_grads,
    train_mlp,
)

__all__ = [
    "AdamState",
    "BiLstmEncoder",
    "GradCheckReport",
    "GradOffender",
    "LstmCell",
    "MlpModel",
    "bilstm_backward",
    "bilstm_encode",
    "bilstm_encode_cached",
    "check_bilstm_mlp_gradients",
    "check_mlp_gradients",
    "create_bilstm",
    "create_lstm_cell",
    "create_mlp",
    "grad_check",
    "load_checkpoint",
    "mlp_forward",
    "mlp_logits",
    "mlp_loss_grads",
    "save_checkpoint",
    "sigmoid",
    "softmax",
    "train_mlp",
]

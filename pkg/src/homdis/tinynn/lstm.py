"""Single-layer BiLSTM encoder with manual backprop through time.

The encoder output is the concatenation of the final forward and final
backward hidden states. An empty input sequence encodes to the zero
vector by contract (a one-token sentence has no context words).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ShapeError
from .core import glorot_uniform, sigmoid

# Cache of one LSTM step: x, h_prev, c_prev, i, f, g, o, c, tanh_c
_StepCache = tuple[np.ndarray, ...]


@dataclass
class LstmCell:
    """Gate order along the first axis is [input, forget, cell, output]."""

    w: np.ndarray  # (4H, D)
    u: np.ndarray  # (4H, H)
    b: np.ndarray  # (4H,)

    @property
    def hidden_size(self) -> int:
        return int(self.u.shape[1])

    @property
    def input_dim(self) -> int:
        return int(self.w.shape[1])


@dataclass
class BiLstmEncoder:
    fwd: LstmCell
    bwd: LstmCell

    @property
    def input_dim(self) -> int:
        return self.fwd.input_dim

    @property
    def hidden_size(self) -> int:
        return self.fwd.hidden_size

    @property
    def output_dim(self) -> int:
        return 2 * self.hidden_size

    def parameters(self) -> dict[str, np.ndarray]:
        return {
            "fwd.w": self.fwd.w, "fwd.u": self.fwd.u, "fwd.b": self.fwd.b,
            "bwd.w": self.bwd.w, "bwd.u": self.bwd.u, "bwd.b": self.bwd.b,
        }


def create_lstm_cell(
    input_dim: int, hidden_size: int, rng: np.random.Generator
) -> LstmCell:
    return LstmCell(
        w=glorot_uniform(rng, (4 * hidden_size, input_dim), input_dim, hidden_size),
        u=glorot_uniform(rng, (4 * hidden_size, hidden_size), hidden_size, hidden_size),
        b=np.zeros(4 * hidden_size, dtype=np.float64),
    )


def create_bilstm(input_dim: int, hidden_size: int, seed: int) -> BiLstmEncoder:
    rng = np.random.default_rng(seed)
    return BiLstmEncoder(
        fwd=create_lstm_cell(input_dim, hidden_size, rng),
        bwd=create_lstm_cell(input_dim, hidden_size, rng),
    )


def _gates(cell: LstmCell, z: np.ndarray) -> tuple[np.ndarray, ...]:
    h = cell.hidden_size
    return (
        sigmoid(z[:h]),
        sigmoid(z[h : 2 * h]),
        np.tanh(z[2 * h : 3 * h]),
        sigmoid(z[3 * h :]),
    )


def _run_direction(
    cell: LstmCell, xs: Sequence[np.ndarray]
) -> tuple[np.ndarray, list[_StepCache]]:
    h = np.zeros(cell.hidden_size, dtype=np.float64)
    c = np.zeros(cell.hidden_size, dtype=np.float64)
    cache: list[_StepCache] = []
    for x in xs:
        z = cell.w @ x + cell.u @ h + cell.b
        i, f, g, o = _gates(cell, z)
        c_new = f * c + i * g
        tanh_c = np.tanh(c_new)
        h_new = o * tanh_c
        cache.append((x, h, c, i, f, g, o, c_new, tanh_c))
        h, c = h_new, c_new
    return h, cache


def _backward_direction(
    cell: LstmCell, cache: list[_StepCache], d_h_final: np.ndarray
) -> tuple[dict[str, np.ndarray], list[np.ndarray]]:
    dw = np.zeros_like(cell.w)
    du = np.zeros_like(cell.u)
    db = np.zeros_like(cell.b)
    d_xs: list[np.ndarray] = [np.empty(0)] * len(cache)
    dh = d_h_final
    dc = np.zeros(cell.hidden_size, dtype=np.float64)
    for t in range(len(cache) - 1, -1, -1):
        x, h_prev, c_prev, i, f, g, o, _c, tanh_c = cache[t]
        do = dh * tanh_c
        dc = dc + dh * o * (1.0 - tanh_c**2)
        di = dc * g
        df = dc * c_prev
        dg = dc * i
        dz = np.concatenate([
            di * i * (1.0 - i),
            df * f * (1.0 - f),
            dg * (1.0 - g**2),
            do * o * (1.0 - o),
        ])
        dw += np.outer(dz, x)
        du += np.outer(dz, h_prev)
        db += dz
        d_xs[t] = cell.w.T @ dz
        dh = cell.u.T @ dz
        dc = dc * f
    return {"w": dw, "u": du, "b": db}, d_xs


def _check_sequence(enc: BiLstmEncoder, xs: Sequence[np.ndarray]) -> list[np.ndarray]:
    clean = []
    for pos, x in enumerate(xs):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or x.shape[0] != enc.input_dim:
            raise ShapeError(
                f"sequence element {pos} has shape {x.shape}, expected "
                f"({enc.input_dim},)"
            )
        clean.append(x)
    return clean


def bilstm_encode(enc: BiLstmEncoder, xs: Sequence[np.ndarray]) -> np.ndarray:
    """Encode a sequence to [final forward state || final backward state]."""
    out, _ = bilstm_encode_cached(enc, xs)
    return out


def bilstm_encode_cached(
    enc: BiLstmEncoder, xs: Sequence[np.ndarray]
) -> tuple[np.ndarray, tuple[list[_StepCache], list[_StepCache]]]:
    xs = _check_sequence(enc, xs)
    if not xs:
        return np.zeros(enc.output_dim, dtype=np.float64), ([], [])
    h_fwd, cache_fwd = _run_direction(enc.fwd, xs)
    h_bwd, cache_bwd = _run_direction(enc.bwd, xs[::-1])
    return np.concatenate([h_fwd, h_bwd]), (cache_fwd, cache_bwd)


def bilstm_backward(
    enc: BiLstmEncoder,
    caches: tuple[list[_StepCache], list[_StepCache]],
    d_out: np.ndarray,
) -> tuple[dict[str, np.ndarray], list[np.ndarray]]:
    """Gradients for all cell parameters plus each input vector.

    Returns an empty input-gradient list (and zero parameter gradients)
    for the empty-sequence zero encoding.
    """
    cache_fwd, cache_bwd = caches
    h = enc.hidden_size
    if not cache_fwd:
        zeros = {name: np.zeros_like(p) for name, p in enc.parameters().items()}
        return zeros, []
    g_fwd, dx_fwd = _backward_direction(enc.fwd, cache_fwd, d_out[:h])
    g_bwd, dx_bwd_rev = _backward_direction(enc.bwd, cache_bwd, d_out[h:])
    grads = {f"fwd.{k}": v for k, v in g_fwd.items()}
    grads.update({f"bwd.{k}": v for k, v in g_bwd.items()})
    n = len(dx_fwd)
    d_inputs = [dx_fwd[t] + dx_bwd_rev[n - 1 - t] for t in range(n)]
    return grads, d_inputs

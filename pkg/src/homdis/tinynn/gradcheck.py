"""Finite-difference verification for the hand-written backprop.

Central differences with h = 1e-4. The relative-error denominator is
floored at a small scale: below it the O(h^2) truncation noise of the
difference quotient would dominate and near-zero gradients would flag
spuriously.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .lstm import BiLstmEncoder, bilstm_backward, bilstm_encode_cached
from .mlp import MlpModel, mlp_loss_grads

DEFAULT_STEP = 1e-4
SCALE_FLOOR = 1e-2


@dataclass(frozen=True)
class GradOffender:
    param: str
    index: tuple[int, ...]
    analytic: float
    numeric: float
    rel_error: float


@dataclass
class GradCheckReport:
    passed: bool
    tolerance: float
    max_rel_error: float
    checked: int
    offenders: list[GradOffender] = field(default_factory=list)

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        lines = [
            f"{status}: {self.checked} partial derivatives, "
            f"max relative error {self.max_rel_error:.3e} "
            f"(tolerance {self.tolerance:.1e})"
        ]
        for off in self.offenders:
            lines.append(
                f"  {off.param}{list(off.index)}: analytic={off.analytic:.6e} "
                f"numeric={off.numeric:.6e} rel_error={off.rel_error:.3e}"
            )
        return "\n".join(lines)


def grad_check(
    params: dict[str, np.ndarray],
    loss_fn: Callable[[], float],
    analytic: dict[str, np.ndarray],
    tolerance: float,
    h: float = DEFAULT_STEP,
    max_offenders: int = 10,
) -> GradCheckReport:
    """Compare analytic gradients against central finite differences.

    loss_fn must recompute the loss from the current parameter values;
    parameters are perturbed in place and restored.
    """
    failures: list[GradOffender] = []
    max_rel = 0.0
    checked = 0
    for name, p in params.items():
        a_grad = analytic[name]
        flat = p.reshape(-1)
        a_flat = np.asarray(a_grad).reshape(-1)
        for j in range(flat.shape[0]):
            orig = flat[j]
            flat[j] = orig + h
            loss_plus = loss_fn()
            flat[j] = orig - h
            loss_minus = loss_fn()
            flat[j] = orig
            numeric = (loss_plus - loss_minus) / (2.0 * h)
            a = float(a_flat[j])
            rel = abs(a - numeric) / max(abs(a) + abs(numeric), SCALE_FLOOR)
            checked += 1
            max_rel = max(max_rel, rel)
            if rel > tolerance:
                failures.append(
                    GradOffender(
                        param=name,
                        index=np.unravel_index(j, p.shape),
                        analytic=a,
                        numeric=float(numeric),
                        rel_error=float(rel),
                    )
                )
    failures.sort(key=lambda o: o.rel_error, reverse=True)
    return GradCheckReport(
        passed=not failures,
        tolerance=tolerance,
        max_rel_error=float(max_rel),
        checked=checked,
        offenders=failures[:max_offenders],
    )


def check_mlp_gradients(
    model: MlpModel,
    x: np.ndarray,
    label: int,
    tolerance: float = 1e-4,
    h: float = DEFAULT_STEP,
) -> GradCheckReport:
    x = np.asarray(x, dtype=np.float64)
    _, analytic, _ = mlp_loss_grads(model, x, label)
    return grad_check(
        model.parameters(),
        lambda: mlp_loss_grads(model, x, label)[0],
        analytic,
        tolerance,
        h,
    )


def check_bilstm_mlp_gradients(
    enc: BiLstmEncoder,
    mlp: MlpModel,
    xs: Sequence[np.ndarray],
    label: int,
    tolerance: float = 1e-4,
    h: float = DEFAULT_STEP,
) -> GradCheckReport:
    """Verify the composite encoder -> classifier gradient path."""
    xs = [np.asarray(x, dtype=np.float64) for x in xs]

    def loss_fn() -> float:
        out, _ = bilstm_encode_cached(enc, xs)
        return mlp_loss_grads(mlp, out, label)[0]

    out, caches = bilstm_encode_cached(enc, xs)
    _, mlp_grads, d_enc = mlp_loss_grads(mlp, out, label)
    enc_grads, _ = bilstm_backward(enc, caches, d_enc)

    params = {f"enc.{k}": v for k, v in enc.parameters().items()}
    params.update({f"mlp.{k}": v for k, v in mlp.parameters().items()})
    analytic = {f"enc.{k}": v for k, v in enc_grads.items()}
    analytic.update({f"mlp.{k}": v for k, v in mlp_grads.items()})
    return grad_check(params, loss_fn, analytic, tolerance, h)

"""Adam on flat parameter vectors, plus a central-difference gradient oracle."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["AdamState", "init_adam_state", "adam_step", "finite_diff_gradient"]

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class AdamState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int


def init_adam_state(param_count: int) -> AdamState:
    return AdamState(
        first_moment=np.zeros(param_count),
        second_moment=np.zeros(param_count),
        step_count=0,
    )


def adam_step(
    params: np.ndarray, grads: np.ndarray, state: AdamState, lr: float
) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update. Inputs are left unmodified."""
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if grads.shape != params.shape or state.first_moment.shape != params.shape:
        raise ValueError(
            f"shape mismatch: params {params.shape}, grads {grads.shape}, "
            f"adam state {state.first_moment.shape}"
        )
    if lr <= 0.0:
        raise ValueError(f"lr must be > 0, got {lr}")
    if not np.all(np.isfinite(grads)):
        raise ValueError("non-finite gradient entries; update rejected")

    t = state.step_count + 1
    m = ADAM_BETA1 * state.first_moment + (1.0 - ADAM_BETA1) * grads
    v = ADAM_BETA2 * state.second_moment + (1.0 - ADAM_BETA2) * grads * grads
    m_hat = m / (1.0 - ADAM_BETA1**t)
    v_hat = v / (1.0 - ADAM_BETA2**t)
    new_params = params - lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
    return new_params, AdamState(first_moment=m, second_moment=v, step_count=t)


def finite_diff_gradient(
    loss_fn: Callable[[np.ndarray], float], params: np.ndarray, h: float = 1e-5
) -> np.ndarray:
    """Central differences (f(x + h e_i) - f(x - h e_i)) / (2h) per coordinate.

    loss_fn must be pure and deterministic; this is the independent oracle the
    analytic backprop path is checked against.
    """
    if h <= 0.0:
        raise ValueError(f"h must be > 0, got {h}")
    work = np.array(params, dtype=np.float64, copy=True)
    grad = np.empty_like(work)
    for i in range(work.shape[0]):
        orig = work[i]
        work[i] = orig + h
        f_plus = loss_fn(work)
        work[i] = orig - h
        f_minus = loss_fn(work)
        work[i] = orig
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise RuntimeError(f"non-finite loss evaluation at coordinate {i}")
        grad[i] = (f_plus - f_minus) / (2.0 * h)
    return grad

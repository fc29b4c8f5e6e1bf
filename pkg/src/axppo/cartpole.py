"""Self-contained CartPole-v1 physics: explicit Euler, 500-step limit, unit reward.

Constants and semantics follow the public CartPole-v1 specification so returns
are comparable with agents trained on the reference environment: the position
is updated with the pre-update velocity, termination is checked after the
state update, and the reward is 1.0 on every step including the last.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PhysicsConstants",
    "DEFAULT_CONSTANTS",
    "CartPoleState",
    "StepResult",
    "reset",
    "step",
    "max_return",
]


@dataclass(frozen=True)
class PhysicsConstants:
    gravity: float = 9.8
    cart_mass: float = 1.0
    pole_mass: float = 0.1
    half_pole_length: float = 0.5
    force_magnitude: float = 10.0
    dt: float = 0.02
    x_threshold: float = 2.4
    theta_threshold: float = 12.0 * math.pi / 180.0
    max_episode_steps: int = 500
    reward_per_step: float = 1.0


DEFAULT_CONSTANTS = PhysicsConstants()


@dataclass(frozen=True)
class CartPoleState:
    x: float
    x_dot: float
    theta: float
    theta_dot: float
    elapsed_steps: int = 0

    def as_obs(self) -> np.ndarray:
        return np.array([self.x, self.x_dot, self.theta, self.theta_dot])


@dataclass(frozen=True)
class StepResult:
    next_state: CartPoleState
    reward: float
    terminated: bool
    truncated: bool


def reset(rng: np.random.Generator, constants: PhysicsConstants = DEFAULT_CONSTANTS) -> CartPoleState:
    """Fresh episode start: all four components uniform in [-0.05, 0.05]."""
    x, x_dot, theta, theta_dot = rng.uniform(-0.05, 0.05, size=4)
    return CartPoleState(x=x, x_dot=x_dot, theta=theta, theta_dot=theta_dot, elapsed_steps=0)


def step(
    state: CartPoleState, action: int, constants: PhysicsConstants = DEFAULT_CONSTANTS
) -> StepResult:
    """Advance one time step. action 0 pushes left, 1 pushes right."""
    if action not in (0, 1):
        raise ValueError(f"action must be 0 or 1, got {action!r}")
    c = constants
    force = c.force_magnitude if action == 1 else -c.force_magnitude
    cos_theta = math.cos(state.theta)
    sin_theta = math.sin(state.theta)
    total_mass = c.cart_mass + c.pole_mass
    pole_mass_length = c.pole_mass * c.half_pole_length

    temp = (force + pole_mass_length * state.theta_dot**2 * sin_theta) / total_mass
    theta_acc = (c.gravity * sin_theta - cos_theta * temp) / (
        c.half_pole_length * (4.0 / 3.0 - c.pole_mass * cos_theta**2 / total_mass)
    )
    x_acc = temp - pole_mass_length * theta_acc * cos_theta / total_mass

    next_state = CartPoleState(
        x=state.x + c.dt * state.x_dot,
        x_dot=state.x_dot + c.dt * x_acc,
        theta=state.theta + c.dt * state.theta_dot,
        theta_dot=state.theta_dot + c.dt * theta_acc,
        elapsed_steps=state.elapsed_steps + 1,
    )
    terminated = abs(next_state.x) > c.x_threshold or abs(next_state.theta) > c.theta_threshold
    truncated = not terminated and next_state.elapsed_steps >= c.max_episode_steps
    return StepResult(
        next_state=next_state,
        reward=c.reward_per_step,
        terminated=terminated,
        truncated=truncated,
    )


def max_return(constants: PhysicsConstants = DEFAULT_CONSTANTS) -> float:
    """Largest return a single episode can collect."""
    return constants.max_episode_steps * constants.reward_per_step

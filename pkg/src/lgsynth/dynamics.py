"""Time- and frequency-domain evaluation of state-space models."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .lineargraph import StateSpaceModel


class DynamicsError(Exception):
    """Base class for simulation and evaluation failures."""


class NonFiniteStateError(DynamicsError):
    """Integration overflowed or produced NaN."""

    def __init__(self, message: str, last_valid_step: int):
        super().__init__(message)
        self.last_valid_step = last_valid_step


class BadChannelError(DynamicsError):
    """Requested output channel does not exist."""


@dataclass(eq=False)
class FrequencyResponse:
    """Complex gains on a frequency grid.

    ``gains`` has shape (len(freqs_hz), outputs, inputs). Grid points where
    the resolvent was exactly singular are listed in ``singular`` and hold
    NaN gains; callers decide how to treat them.
    """

    freqs_hz: np.ndarray
    gains: np.ndarray
    singular: tuple[int, ...] = ()

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.gains)

    @property
    def phases(self) -> np.ndarray:
        return np.angle(self.gains)


@dataclass(eq=False)
class Trajectory:
    """Uniformly sampled states and outputs from a time simulation."""

    times: np.ndarray
    states: np.ndarray
    outputs: np.ndarray


def frequency_response(ss: StateSpaceModel, freqs_hz: Sequence[float]) -> FrequencyResponse:
    """Evaluate gain(w) = C (jwI - A)^-1 B + D + jw F at each frequency.

    Frequencies are in hertz, strictly increasing and positive. For models
    without states the gain reduces to D + jw F.
    """
    freqs = np.asarray(freqs_hz, dtype=float)
    if freqs.ndim != 1 or freqs.size == 0:
        raise ValueError("freqs_hz must be a non-empty 1-D sequence")
    if np.any(freqs <= 0.0) or np.any(np.diff(freqs) <= 0.0):
        raise ValueError("freqs_hz must be positive and strictly increasing")

    omega = 2.0 * np.pi * freqs
    n = ss.A.shape[0]
    jw_f = 1j * omega[:, None, None] * ss.F[None, :, :]
    if n == 0:
        gains = np.broadcast_to(ss.D.astype(complex), (freqs.size,) + ss.D.shape) + jw_f
        return FrequencyResponse(freqs, np.ascontiguousarray(gains))

    eye = np.eye(n)
    resolvent_lhs = 1j * omega[:, None, None] * eye[None, :, :] - ss.A[None, :, :]
    singular: list[int] = []
    try:
        x = np.linalg.solve(resolvent_lhs, ss.B.astype(complex))
    except np.linalg.LinAlgError:
        # Some grid point sits exactly on an undamped pole; mark it and keep
        # the rest of the grid usable.
        x = np.empty((freqs.size, n, ss.B.shape[1]), dtype=complex)
        for k in range(freqs.size):
            try:
                x[k] = np.linalg.solve(resolvent_lhs[k], ss.B)
            except np.linalg.LinAlgError:
                x[k] = np.nan
                singular.append(k)
    gains = ss.C[None, :, :] @ x + ss.D[None, :, :] + jw_f
    return FrequencyResponse(freqs, gains, tuple(singular))


def simulate(
    ss: StateSpaceModel,
    input_fn: Callable[[float], Sequence[float] | float],
    t_end: float,
    dt: float,
    x0: Sequence[float] | None = None,
) -> Trajectory:
    """Integrate dx/dt = A x + B u with classical fixed-step 4th-order
    Runge-Kutta and sample y = C x + D u.

    ``input_fn`` maps a time to the input vector (a scalar is accepted for
    single-input models). The derivative feedthrough F is not applied here:
    step-like inputs have zero derivative almost everywhere.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if t_end < dt:
        raise ValueError("t_end must be at least one step long")

    n = ss.A.shape[0]
    m = ss.B.shape[1]
    steps = int(round(t_end / dt))
    times = np.arange(steps + 1) * dt

    def u_at(t: float) -> np.ndarray:
        u = np.atleast_1d(np.asarray(input_fn(t), dtype=float))
        if u.shape != (m,):
            raise ValueError(f"input_fn returned shape {u.shape}, expected ({m},)")
        return u

    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float).copy()
    if x.shape != (n,):
        raise ValueError(f"x0 has shape {x.shape}, expected ({n},)")

    A, B, C, D = ss.A, ss.B, ss.C, ss.D
    states = np.empty((steps + 1, n))
    outputs = np.empty((steps + 1, C.shape[0]))
    states[0] = x
    outputs[0] = C @ x + D @ u_at(0.0)

    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(steps):
            t = times[k]
            u1 = u_at(t)
            u2 = u_at(t + 0.5 * dt)
            u3 = u_at(t + dt)
            k1 = A @ x + B @ u1
            k2 = A @ (x + 0.5 * dt * k1) + B @ u2
            k3 = A @ (x + 0.5 * dt * k2) + B @ u2
            k4 = A @ (x + dt * k3) + B @ u3
            x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(x)):
                raise NonFiniteStateError(
                    f"state became non-finite at step {k + 1} (t={times[k + 1]:.6g})",
                    last_valid_step=k,
                )
            states[k + 1] = x
            outputs[k + 1] = C @ x + D @ u3
    return Trajectory(times, states, outputs)


def integrate_signal(trajectory: Trajectory, channel: int) -> np.ndarray:
    """Cumulative trapezoidal integral of one output channel; starts at 0."""
    n_channels = trajectory.outputs.shape[1]
    if not (0 <= channel < n_channels):
        raise BadChannelError(f"channel {channel} outside 0..{n_channels - 1}")
    y = trajectory.outputs[:, channel]
    steps = np.diff(trajectory.times)
    out = np.empty_like(y)
    out[0] = 0.0
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * steps)
    return out

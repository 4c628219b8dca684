"""Fixed-step and adaptive integrators used to certify the closed forms.

Both drivers integrate autonomous fields f(x) -> dx/dt over real time.  The
fixed-step driver is classical RK4 (with a forward-Euler variant for
convergence debugging); the adaptive driver is the Dormand-Prince 4(5)
embedded pair with PI step-size control.  Trajectories end in one of three
ways: the span was completed, the state norm crossed the blow-up cap, or the
controller pushed the step below its floor.  Failures are recorded on the
trajectory, not raised, so a blow-up is an observable outcome.

Determinism: all arithmetic uses fixed summation orders and no randomness,
so identical inputs reproduce trajectories bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import OverflowSignal, RoundoffFloorError

# Errors below this are round-off noise; order estimates over them are void.
ROUNDOFF_FLOOR = 1e-14


class Termination(Enum):
    COMPLETED = "Completed"
    BLOW_UP = "BlowUp"
    STEP_UNDERFLOW = "StepUnderflow"


@dataclass(frozen=True)
class Trajectory:
    """Recorded states at strictly increasing times plus how the run ended.

    termination_time is None for completed runs.  For BlowUp it is the step
    end that tripped the norm cap (the offending state is not recorded, so
    the last row strictly precedes it); for StepUnderflow it is the time the
    controller was stuck at.
    """

    times: np.ndarray
    states: np.ndarray
    termination: Termination
    termination_time: float | None = None

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states)
        if times.ndim != 1 or states.shape != (times.size, 3):
            raise ValueError("times must be (n,) and states (n, 3)")
        if times.size == 0:
            raise ValueError("a trajectory records at least its initial state")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(states)):
            raise OverflowSignal("recorded states must be finite")
        if self.termination == Termination.COMPLETED:
            if self.termination_time is not None:
                raise ValueError("completed trajectories carry no termination time")
        else:
            if self.termination_time is None:
                raise ValueError(f"{self.termination.value} requires a termination time")
            if self.termination == Termination.BLOW_UP and times[-1] >= self.termination_time:
                raise ValueError("the last recorded state must precede the blow-up time")
        times.setflags(write=False)
        states.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def final_time(self) -> float:
        return float(self.times[-1])


@dataclass(frozen=True)
class StepControl:
    """Adaptive step-size policy and safety rails.

    h_min sits low enough that a pole crossing trips the norm cap (a BlowUp)
    before the controller runs out of step; StepUnderflow is reserved for
    genuinely stuck integrations.
    """

    rtol: float = 1e-9
    atol: float = 1e-12
    h_init: float = 1e-3
    h_min: float = 1e-15
    h_max: float = math.inf
    norm_cap: float = 1e12

    def __post_init__(self) -> None:
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("rtol and atol must be positive")
        if not (0 < self.h_min <= self.h_init <= self.h_max):
            raise ValueError("need 0 < h_min <= h_init <= h_max")
        if not self.norm_cap > 0:
            raise ValueError("norm_cap must be positive")


def _state_array(x0) -> np.ndarray:
    x = np.asarray(x0)
    if x.shape != (3,):
        raise ValueError(f"state must have shape (3,), got {x.shape}")
    dtype = np.complex128 if np.iscomplexobj(x) else np.float64
    x = x.astype(dtype)
    if not np.all(np.isfinite(x)):
        raise OverflowSignal("initial state must be finite")
    return x


def _try_field(field, x: np.ndarray):
    """Evaluate the field, mapping overflow of any flavor to None."""
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            f = np.asarray(field(x))
    except (OverflowSignal, OverflowError, FloatingPointError):
        return None
    if f.shape != (3,) or not np.all(np.isfinite(f)):
        return None
    return f


def _check_span(t0: float, t1: float) -> None:
    if not (np.isfinite(t0) and np.isfinite(t1)):
        raise ValueError("time span must be finite")
    if not t1 > t0:
        raise ValueError(f"need t1 > t0, got [{t0}, {t1}]")


def _rk4_step(field, x, h):
    k1 = _try_field(field, x)
    if k1 is None:
        return None
    k2 = _try_field(field, x + (h / 2) * k1)
    if k2 is None:
        return None
    k3 = _try_field(field, x + (h / 2) * k2)
    if k3 is None:
        return None
    k4 = _try_field(field, x + h * k3)
    if k4 is None:
        return None
    return x + (h / 6) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _euler_step(field, x, h):
    k1 = _try_field(field, x)
    if k1 is None:
        return None
    return x + h * k1


def _fixed_driver(field, x0, t0: float, t1: float, h: float,
                  norm_cap: float, step_fn) -> Trajectory:
    _check_span(t0, t1)
    if not (np.isfinite(h) and h > 0):
        raise ValueError("step size must be a positive finite number")
    x = _state_array(x0)
    n_steps = max(1, int(math.ceil((t1 - t0) / h - 1e-12)))
    times = [t0]
    states = [x.copy()]
    for i in range(n_steps):
        last = i == n_steps - 1
        t_next = t1 if last else t0 + (i + 1) * h
        x_next = step_fn(field, x, t1 - (t0 + i * h) if last else h)
        blown = x_next is None or not np.all(np.isfinite(x_next)) \
            or np.max(np.abs(x_next)) > norm_cap
        if blown:
            return Trajectory(np.array(times), np.array(states),
                              Termination.BLOW_UP, termination_time=t_next)
        times.append(t_next)
        states.append(x_next)
        x = x_next
    return Trajectory(np.array(times), np.array(states), Termination.COMPLETED)


def rk4_fixed(field, x0, t0: float, t1: float, h: float,
              norm_cap: float = StepControl.norm_cap) -> Trajectory:
    """Classical RK4 with fixed step h; the last step is shortened to hit t1."""
    return _fixed_driver(field, x0, t0, t1, h, norm_cap, _rk4_step)


def euler_fixed(field, x0, t0: float, t1: float, h: float,
                norm_cap: float = StepControl.norm_cap) -> Trajectory:
    """Forward Euler with fixed step; a first-order control for order studies."""
    return _fixed_driver(field, x0, t0, t1, h, norm_cap, _euler_step)


# Dormand-Prince 4(5) tableau.  B5 is the fifth-order propagating weight
# vector; ERR = B5 - B4 feeds the embedded error estimate.
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_ERR = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

# PI controller constants (the classic tuning for a 5th-order pair).
_PI_BETA = 0.04
_PI_ALPHA = 0.2 - 0.75 * _PI_BETA
_SAFETY = 0.9
_MAX_GROW = 5.0
_MIN_SHRINK = 0.2


def _error_norm(err_vec, x, x_new, rtol, atol) -> float:
    scale = atol + rtol * np.maximum(np.abs(x), np.abs(x_new))
    with np.errstate(over="ignore", invalid="ignore"):
        ratio = np.abs(err_vec) / scale
        value = float(np.sqrt(np.mean(ratio * ratio)))
    return value if np.isfinite(value) else math.inf


def adaptive_45(field, x0, t0: float, t1: float,
                control: StepControl | None = None) -> Trajectory:
    """Dormand-Prince 4(5) with PI step control; records accepted steps.

    Rejected trial steps (error over tolerance or a non-finite stage) shrink
    the step; once the step cannot shrink below control.h_min the run ends
    in StepUnderflow.  Accepted states past control.norm_cap end it in
    BlowUp without recording the offending state.
    """
    ctrl = control if control is not None else StepControl()
    _check_span(t0, t1)
    x = _state_array(x0)
    times = [t0]
    states = [x.copy()]
    t = t0
    tiny = 4.0 * np.finfo(float).eps * max(1.0, abs(t0), abs(t1))
    h = min(ctrl.h_init, ctrl.h_max, t1 - t0)
    k1 = _try_field(field, x)
    if k1 is None:
        return Trajectory(np.array(times), np.array(states),
                          Termination.BLOW_UP, termination_time=t0 + h)
    err_prev = 1e-4
    rejected = False
    while t < t1 - tiny:
        h = min(h, t1 - t)
        if h < ctrl.h_min or t + h == t:
            if t1 - t <= ctrl.h_min and not rejected and t + (t1 - t) > t:
                h = t1 - t  # closing sliver, shorter than the floor by design
            else:
                return Trajectory(np.array(times), np.array(states),
                                  Termination.STEP_UNDERFLOW, termination_time=t)
        ks = [k1, None, None, None, None, None, None]
        x_new = None
        failed = False
        for s in range(1, 7):
            with np.errstate(over="ignore", invalid="ignore"):
                xs = x + h * sum(aa * kk for aa, kk in zip(_A[s], ks[:s]))
            if not np.all(np.isfinite(xs)):
                failed = True
                break
            ks[s] = _try_field(field, xs)
            if ks[s] is None:
                failed = True
                break
            if s == 6:
                x_new = xs  # stage 7 sits exactly at the fifth-order update
        if failed:
            err = math.inf
            x_new = None
        else:
            with np.errstate(over="ignore", invalid="ignore"):
                err_vec = h * sum(ee * kk for ee, kk in zip(_ERR, ks) if ee != 0.0)
            err = _error_norm(err_vec, x, x_new, ctrl.rtol, ctrl.atol)

        if err <= 1.0:
            t_new = t + h
            if t1 - t_new < tiny:
                t_new = t1
            if np.max(np.abs(x_new)) > ctrl.norm_cap:
                return Trajectory(np.array(times), np.array(states),
                                  Termination.BLOW_UP, termination_time=t_new)
            times.append(t_new)
            states.append(x_new)
            x = x_new
            t = t_new
            k1 = ks[6]  # FSAL: the last stage is f(x_new)
            if err < 1e-16:
                factor = _MAX_GROW
            else:
                factor = _SAFETY * err ** (-_PI_ALPHA) * err_prev ** _PI_BETA
                factor = min(_MAX_GROW, max(_MIN_SHRINK, factor))
            if rejected:
                factor = min(1.0, factor)
            h = min(h * factor, ctrl.h_max)
            err_prev = max(err, 1e-4)
            rejected = False
        else:
            factor = _SAFETY * err ** (-0.2) if math.isfinite(err) else _MIN_SHRINK
            h = h * max(_MIN_SHRINK, min(1.0, factor))
            rejected = True
    return Trajectory(np.array(times), np.array(states), Termination.COMPLETED)


def integrate_on_grid(field, x0, grid, control: StepControl | None = None) -> Trajectory:
    """Adaptive integration reported exactly at the given strictly increasing times.

    Integrates segment by segment so every grid time is a step endpoint (the
    pair has no dense output); the step length carries over between segments.
    On BlowUp or StepUnderflow the trajectory holds the grid points reached
    so far and the failure marker.
    """
    ctrl = control if control is not None else StepControl()
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a non-empty 1-d array of times")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid times must be strictly increasing")
    x = _state_array(x0)
    times = [float(grid[0])]
    states = [x.copy()]
    seg_ctrl = ctrl
    for t_a, t_b in zip(grid[:-1], grid[1:]):
        traj = adaptive_45(field, x, float(t_a), float(t_b), seg_ctrl)
        if traj.termination != Termination.COMPLETED:
            return Trajectory(np.array(times), np.array(states),
                              traj.termination, termination_time=traj.termination_time)
        x = traj.final_state
        times.append(float(t_b))
        states.append(x.copy())
        if traj.times.size >= 2:
            h_carry = float(np.max(np.diff(traj.times[-3:])))
            h_carry = min(max(h_carry, ctrl.h_min), ctrl.h_max)
            seg_ctrl = replace(ctrl, h_init=h_carry)
    return Trajectory(np.array(times), np.array(states), Termination.COMPLETED)


def estimate_order(field, x0, t0: float, t1: float, h_list, reference,
                   method: str = "rk4") -> float:
    """Least-squares slope of log(endpoint error) against log(h).

    reference is the exact state at t1 (from a closed form).  Needs at least
    four step sizes; raises RoundoffFloorError when any endpoint error sits
    below the round-off floor, where slopes stop meaning anything.
    """
    steppers = {"rk4": rk4_fixed, "euler": euler_fixed}
    if method not in steppers:
        raise ValueError(f"method must be one of {sorted(steppers)}, got {method!r}")
    h_list = [float(h) for h in h_list]
    if len(h_list) < 4:
        raise ValueError("need at least four step sizes (three halvings)")
    if any(h <= 0 for h in h_list):
        raise ValueError("step sizes must be positive")
    reference = np.asarray(reference)
    errors = []
    for h in h_list:
        traj = steppers[method](field, x0, t0, t1, h)
        if traj.termination != Termination.COMPLETED:
            raise ValueError(
                f"step {h} did not complete the span ({traj.termination.value}); "
                "order estimation needs completed runs")
        errors.append(float(np.max(np.abs(traj.final_state - reference))))
    if min(errors) < ROUNDOFF_FLOOR:
        raise RoundoffFloorError(
            f"smallest endpoint error {min(errors):.3e} is below {ROUNDOFF_FLOOR}; "
            "use larger steps")
    slope, _ = np.polyfit(np.log(h_list), np.log(errors), 1)
    return float(slope)

"""Control laws for the testbed.

Two controllers are provided:

* an "intelligent proportional" (iP) controller built on the first-order
  ultra-local model ``dy/dt = F + alpha*u``, where ``F`` lumps together
  unmodeled dynamics and disturbances and is re-estimated online from a
  sliding window of recent samples;
* a classic PI with output saturation and conditional-integration
  anti-windup, used as the comparison baseline.

The F estimators and the control laws are pure functions; per-loop mutable
bookkeeping lives in :class:`UltraLocalState` / :class:`PiState`. One
controller instance is owned by exactly one control loop.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from .errors import ConfigError, ControllerFault, InsufficientWindow

# Sample tuples stored in the estimation window: (t, y, u, y_star_dot, e).
Sample = tuple[float, float, float, float, float]

_SPAN_TOL = 1e-9


@dataclass(frozen=True)
class IpGains:
    """Gains of the iP law: ``u = -(F_est - y_star_dot + kp*e) / alpha``."""

    alpha: float
    kp: float

    def __post_init__(self):
        if self.alpha == 0:
            raise ConfigError("iP gain alpha must be nonzero")


@dataclass(frozen=True)
class PiGains:
    kp: float
    ki: float
    u_min: float
    u_max: float

    def __post_init__(self):
        if not self.u_min < self.u_max:
            raise ConfigError(f"PI bounds must satisfy u_min < u_max, got [{self.u_min}, {self.u_max}]")


@dataclass
class PiState:
    integral: float = 0.0
    anti_windup_active: bool = False


@dataclass
class UltraLocalState:
    """Running state of one iP instance.

    ``window`` holds ``(t, y, u, y_star_dot, e)`` samples with strictly
    increasing timestamps spanning at most ``tau`` (the oldest entry is
    clipped onto the window boundary by linear interpolation, so the span
    never exceeds ``tau`` even when measurements arrive with gaps).
    ``last_u`` is the control most recently commanded by this loop; it is
    the ``u`` recorded with the *next* incoming sample, since it is the
    input that was acting on the plant while that measurement was produced.
    """

    tau: float
    f_init: float = 0.0
    f_est: float = field(init=False)
    last_u: float = 0.0
    window: deque[Sample] = field(init=False)

    def __post_init__(self):
        if self.tau <= 0:
            raise ConfigError("estimation window tau must be positive")
        self.f_est = self.f_init
        self.window = deque()

    def record(self, t: float, y: float, y_star_dot: float, e: float,
               u_active: float | None = None) -> None:
        """Append one accepted measurement and prune the window to span tau.

        ``u_active`` is the input that actually drove the plant over the
        sample interval. When the sensor reports it (piggybacked on the
        measurement) it beats ``last_u``: under control-direction loss the
        two diverge, and the estimate must follow the real input.
        """
        if self.window and t <= self.window[-1][0]:
            raise ValueError(f"window timestamps must strictly increase ({t} after {self.window[-1][0]})")
        u = self.last_u if u_active is None else u_active
        self.window.append((t, y, u, y_star_dot, e))
        self._prune(t - self.tau)

    def _prune(self, boundary: float) -> None:
        w = self.window
        while len(w) >= 2 and w[1][0] <= boundary:
            w.popleft()
        if len(w) >= 2 and w[0][0] < boundary - _SPAN_TOL:
            w[0] = _lerp_sample(w[0], w[1], boundary)

    @property
    def span(self) -> float:
        if len(self.window) < 2:
            return 0.0
        return self.window[-1][0] - self.window[0][0]

    @property
    def ready(self) -> bool:
        return self.span >= self.tau - _SPAN_TOL


def _lerp_sample(a: Sample, b: Sample, t: float) -> Sample:
    w = (t - a[0]) / (b[0] - a[0])
    return (t,) + tuple(a[i] + w * (b[i] - a[i]) for i in range(1, 5))  # type: ignore[return-value]


def ip_control(state: UltraLocalState, gains: IpGains, y_star_dot: float, e: float) -> float:
    """iP law: ``u = -(F_est - y_star_dot + kp*e) / alpha``, unsaturated.

    Saturation is the caller's job (actuator limits belong to the plant).
    """
    if not (math.isfinite(state.f_est) and math.isfinite(y_star_dot) and math.isfinite(e)):
        raise ControllerFault(
            f"non-finite controller input: f_est={state.f_est}, y_star_dot={y_star_dot}, e={e}"
        )
    return -(state.f_est - y_star_dot + gains.kp * e) / gains.alpha


def estimate_f_integral(window, tau: float, alpha: float) -> float:
    """Windowed integral estimate of F.

    Evaluates ``-(6/T^3) * integral_0^T [(T - 2s)*y + alpha*s*(T - s)*u] ds``
    over the window (``s`` is the local window coordinate, ``T`` the actual
    window span, nominally ``tau``) with the trapezoidal rule. The kernel
    annihilates constant ``y`` and recovers the slope of affine ``y``
    exactly in the continuous limit; it acts as a low-pass on noise.
    """
    if len(window) < 2:
        raise InsufficientWindow(f"need at least 2 samples, have {len(window)}")
    t0 = window[0][0]
    span = window[-1][0] - t0
    if span < tau - max(_SPAN_TOL, 1e-9 * tau):
        raise InsufficientWindow(f"window spans {span:.6g} s < tau={tau:.6g} s")
    acc = 0.0
    prev_s = 0.0
    prev_g = span * window[0][1]  # kernel at s=0: (T-0)*y + 0*u
    for t, y, u, _ysd, _e in window:
        s = t - t0
        g = (span - 2.0 * s) * y + alpha * s * (span - s) * u
        acc += 0.5 * (g + prev_g) * (s - prev_s)
        prev_s, prev_g = s, g
    return -6.0 / span**3 * acc


def estimate_f_loop(window, tau: float, alpha: float, kp: float) -> float:
    """Closed-loop average estimate of F.

    Evaluates ``(1/T) * integral [y_star_dot - alpha*u - kp*e] ds`` over the
    window with the trapezoidal rule. Only meaningful when the loop is
    closed with the iP law using the same ``alpha`` and ``kp``.
    """
    if len(window) < 2:
        raise InsufficientWindow(f"need at least 2 samples, have {len(window)}")
    t0 = window[0][0]
    span = window[-1][0] - t0
    if span < tau - max(_SPAN_TOL, 1e-9 * tau):
        raise InsufficientWindow(f"window spans {span:.6g} s < tau={tau:.6g} s")
    acc = 0.0
    prev_t = t0
    prev_h = window[0][3] - alpha * window[0][2] - kp * window[0][4]
    for t, _y, u, ysd, e in window:
        h = ysd - alpha * u - kp * e
        acc += 0.5 * (h + prev_h) * (t - prev_t)
        prev_t, prev_h = t, h
    return acc / span


def pi_control(state: PiState, gains: PiGains, e: float, dt: float, anti_windup: bool = True) -> float:
    """PI law ``u = kp*e + ki*integral(e)`` with saturation.

    Conditional integration: the integral only accumulates while the raw
    output is inside the actuator range or the error is pushing it back
    toward that range. ``anti_windup=False`` disables the conditioning
    (integrates always); it exists for the windup regression test.
    """
    if not (math.isfinite(e) and math.isfinite(dt)) or dt <= 0:
        raise ControllerFault(f"bad PI input: e={e}, dt={dt}")
    u_raw = gains.kp * e + gains.ki * state.integral
    u = min(max(u_raw, gains.u_min), gains.u_max)
    if anti_windup:
        inside = gains.u_min <= u_raw <= gains.u_max
        pushes_back = (u_raw > gains.u_max and gains.ki * e < 0) or (
            u_raw < gains.u_min and gains.ki * e > 0
        )
        if inside or pushes_back:
            state.integral += e * dt
            state.anti_windup_active = False
        else:
            state.anti_windup_active = True
    else:
        state.integral += e * dt
        state.anti_windup_active = False
    return u


ESTIMATORS = ("integral", "loop")


class IpController:
    """Stateful iP loop helper: window bookkeeping + estimate + control.

    ``step`` is called once per accepted measurement; the freeze path on a
    missed measurement is simply *not calling it* (the owner re-emits
    ``last_u`` and the estimate stays put).
    """

    def __init__(self, gains: IpGains, tau: float, estimator: str = "integral", f_init: float = 0.0):
        if estimator not in ESTIMATORS:
            raise ConfigError(f"unknown estimator {estimator!r}, expected one of {ESTIMATORS}")
        self.gains = gains
        self.estimator = estimator
        self.state = UltraLocalState(tau=tau, f_init=f_init)

    @property
    def f_est(self) -> float:
        return self.state.f_est

    @property
    def last_u(self) -> float:
        return self.state.last_u

    def step(self, t: float, y: float, y_star: float, y_star_dot: float,
             u_active: float | None = None) -> float:
        e = y - y_star
        self.state.record(t, y, y_star_dot, e, u_active=u_active)
        if self.state.ready:
            if self.estimator == "integral":
                self.state.f_est = estimate_f_integral(self.state.window, self.state.tau, self.gains.alpha)
            else:
                self.state.f_est = estimate_f_loop(
                    self.state.window, self.state.tau, self.gains.alpha, self.gains.kp
                )
        return ip_control(self.state, self.gains, y_star_dot, e)

    def note_applied(self, u: float) -> None:
        """Record the control actually sent out (post-saturation)."""
        self.state.last_u = u


class PiController:
    """Stateful PI loop helper mirroring :class:`IpController`'s interface."""

    def __init__(self, gains: PiGains, anti_windup: bool = True):
        self.gains = gains
        self.anti_windup = anti_windup
        self.state = PiState()

    def step(self, e: float, dt: float) -> float:
        return pi_control(self.state, self.gains, e, dt, self.anti_windup)

"""Second-order continuous plant advanced by classical 4th-order fixed-step integration.

The plant is a strictly proper transfer function num/den realized in
controllable canonical form and driven by a zero-order-held input.  For a
linear system with constant input, one classical RK4 step of length s is
exactly x' = F(s) x + H(s) u with

    F(s) = I + sA + s^2 A^2/2 + s^3 A^3/6 + s^4 A^4/24
    H(s) = (s I + s^2 A/2 + s^3 A^2/6 + s^4 A^3/24) B

so n full steps are composed in O(log n) 2x2 products instead of n stage
evaluations.  A final shorter step covers durations that are not a whole
multiple of dt.
"""

from __future__ import annotations

import math

from .engine import SimulationError, US_PER_SECOND

Mat2 = tuple[float, float, float, float]   # row-major 2x2
Vec2 = tuple[float, float]

_IDENTITY: Mat2 = (1.0, 0.0, 0.0, 1.0)

# default coefficients: the DC-motor transfer function 1 / (0.5 s^2 + 6 s + 10)
DEFAULT_NUM = (1.0,)
DEFAULT_DEN = (0.5, 6.0, 10.0)
DEFAULT_DT = 1e-4


def _mat_mul(a: Mat2, b: Mat2) -> Mat2:
    return (a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3])


def _mat_vec(a: Mat2, v: Vec2) -> Vec2:
    return (a[0] * v[0] + a[1] * v[1], a[2] * v[0] + a[3] * v[1])


def _mat_add(a: Mat2, b: Mat2) -> Mat2:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3])


def _vec_add(a: Vec2, b: Vec2) -> Vec2:
    return (a[0] + b[0], a[1] + b[1])


def _mat_scale(a: Mat2, s: float) -> Mat2:
    return (a[0] * s, a[1] * s, a[2] * s, a[3] * s)


class LtiPlant:
    """State-space plant x' = Ax + Bu, y = Cx with a held scalar input."""

    def __init__(self, num=DEFAULT_NUM, den=DEFAULT_DEN, dt: float = DEFAULT_DT):
        if len(den) != 3 or den[0] == 0:
            raise ValueError("denominator must have exactly three coefficients with a nonzero leading term")
        if not 1 <= len(num) <= 2:
            raise ValueError("numerator must have one or two coefficients (strictly proper)")
        d2, d1, d0 = (float(c) for c in den)
        a1 = d1 / d2
        a0 = d0 / d2
        ncoef = [float(c) / d2 for c in num]
        n1, n0 = (0.0, ncoef[0]) if len(ncoef) == 1 else (ncoef[0], ncoef[1])
        # controllable canonical form
        self.a_matrix: Mat2 = (0.0, 1.0, -a0, -a1)
        self.b_vector: Vec2 = (0.0, 1.0)
        self.c_vector: Vec2 = (n0, n1)
        self._check_dt(dt, a1, a0)
        self.dt = dt
        self.dt_us = int(round(dt * US_PER_SECOND))
        if self.dt_us < 1 or abs(self.dt_us - dt * US_PER_SECOND) > 1e-6:
            raise ValueError("dt must be a whole number of microseconds")
        self.x0 = 0.0
        self.x1 = 0.0
        self.u_held = 0.0
        # powers of A for the 4th-order Taylor transition matrices
        a = self.a_matrix
        self._a2 = _mat_mul(a, a)
        self._a3 = _mat_mul(self._a2, a)
        self._a4 = _mat_mul(self._a3, a)
        self._full = self._transition(dt)
        self._pow2: list[tuple[Mat2, Mat2]] = [self._full]

    @staticmethod
    def _check_dt(dt: float, a1: float, a0: float) -> None:
        if dt <= 0:
            raise ValueError("dt must be positive")
        # dt must resolve the fastest stable mode: dt <= tau_min / 10
        disc = a1 * a1 - 4 * a0
        if disc >= 0:
            res = [(-a1 + math.sqrt(disc)) / 2, (-a1 - math.sqrt(disc)) / 2]
        else:
            res = [-a1 / 2, -a1 / 2]
        rates = [-r for r in res if r < 0]
        if rates and dt > 0.1 / max(rates):
            raise ValueError(
                f"dt={dt} too coarse for fastest time constant {1 / max(rates):.4g} s")

    def _transition(self, step: float) -> tuple[Mat2, Mat2]:
        """(F, Q) for one step of length `step`; Q maps B*u, i.e. x' = Fx + Q B u."""
        a, a2, a3, a4 = self.a_matrix, self._a2, self._a3, self._a4
        f = _mat_add(_IDENTITY, _mat_scale(a, step))
        f = _mat_add(f, _mat_scale(a2, step * step / 2))
        f = _mat_add(f, _mat_scale(a3, step ** 3 / 6))
        f = _mat_add(f, _mat_scale(a4, step ** 4 / 24))
        q = _mat_scale(_IDENTITY, step)
        q = _mat_add(q, _mat_scale(a, step * step / 2))
        q = _mat_add(q, _mat_scale(a2, step ** 3 / 6))
        q = _mat_add(q, _mat_scale(a3, step ** 4 / 24))
        return f, q

    def _apply(self, f: Mat2, q: Mat2) -> None:
        u = self.u_held
        bu = (self.b_vector[0] * u, self.b_vector[1] * u)
        x = (self.x0, self.x1)
        nx = _vec_add(_mat_vec(f, x), _mat_vec(q, bu))
        self.x0, self.x1 = nx

    def step_us(self, duration_us: int) -> None:
        """Advance the state by duration_us under the currently held input."""
        if duration_us < 0:
            raise SimulationError("cannot integrate backwards")
        if duration_us == 0:
            return
        n, rem_us = divmod(duration_us, self.dt_us)
        if n:
            self._advance_full_steps(n)
        if rem_us:
            f, q = self._transition(rem_us / US_PER_SECOND)
            self._apply(f, q)
        if not (math.isfinite(self.x0) and math.isfinite(self.x1)):
            raise SimulationError("plant state diverged to a non-finite value")

    def step(self, duration: float) -> None:
        self.step_us(int(round(duration * US_PER_SECOND)))

    def _advance_full_steps(self, n: int) -> None:
        # binary composition: (F_{a+b}, Q_{a+b}) = (F_a F_b, F_a Q_b + Q_a)
        pow2 = self._pow2
        acc: tuple[Mat2, Mat2] | None = None
        bit = 0
        while n:
            while bit >= len(pow2):
                f, q = pow2[-1]
                pow2.append((_mat_mul(f, f), _mat_add(_mat_mul(f, q), q)))
            if n & 1:
                f, q = pow2[bit]
                if acc is None:
                    acc = (f, q)
                else:
                    af, aq = acc
                    acc = (_mat_mul(f, af), _mat_add(_mat_mul(f, aq), q))
            n >>= 1
            bit += 1
        if acc is not None:
            self._apply(*acc)

    def output(self) -> float:
        return self.c_vector[0] * self.x0 + self.c_vector[1] * self.x1

    def set_input(self, u: float) -> None:
        self.u_held = u

"""Periodic scalar profiles used as forcing data.

A profile is a finite sum of terms, each a constant, a sine or cosine
harmonic of the period, or a periodic cubic spline through uniformly
spaced nodes. Scalar evaluation avoids numpy so it stays cheap inside ODE
right-hand sides.
"""

import math

import numpy as np
from scipy.interpolate import CubicSpline


class PeriodicProfile:
    """Sum of periodic terms on ``[0, period)``.

    Use the constructors ``zero``, ``constant``, ``sin``, ``cos``,
    ``table`` or ``parse`` rather than building terms by hand.
    """

    def __init__(self, period, terms=()):
        self.period = float(period)
        if not self.period > 0:
            raise ValueError("profile period must be positive")
        self.terms = tuple(terms)

    @classmethod
    def zero(cls, period):
        return cls(period)

    @classmethod
    def constant(cls, value, period):
        return cls(period, [("const", float(value))])

    @classmethod
    def sin(cls, amplitude, k, period):
        return cls(period, [("sin", float(amplitude), float(k))])

    @classmethod
    def cos(cls, amplitude, k, period):
        return cls(period, [("cos", float(amplitude), float(k))])

    @classmethod
    def table(cls, values, period):
        """Periodic cubic spline through ``values`` at ``j * period / n``.

        A trailing node equal to the first is treated as the wrap point.
        """
        v = np.asarray(values, dtype=float).ravel()
        if v.size >= 2 and v[-1] == v[0]:
            v = v[:-1]
        if v.size == 0:
            raise ValueError("profile table is empty")
        if v.size < 3 or np.all(v == v[0]):
            return cls.constant(v[0], period)
        n = v.size
        x = np.linspace(0.0, period, n + 1)
        sp = CubicSpline(x, np.append(v, v[0]), bc_type="periodic")
        return cls(period, [("table", period / n, sp.c.copy(), sp)])

    @classmethod
    def parse(cls, spec, period):
        """Build a profile from a preset string or a node array.

        Presets are ``"zero"``, ``"constant:<v>"``, ``"sin:<A>,<k>"`` and
        ``"cos:<A>,<k>"``; a harmonic ``k`` completes ``k`` cycles per period.
        """
        if isinstance(spec, PeriodicProfile):
            return spec
        if isinstance(spec, (int, float)):
            return cls.constant(spec, period)
        if isinstance(spec, str):
            name, _, args = spec.strip().partition(":")
            name = name.strip().lower()
            try:
                nums = [float(t) for t in args.split(",")] if args.strip() else []
            except ValueError:
                raise ValueError(f"bad profile preset {spec!r}") from None
            if name == "zero" and not nums:
                return cls.zero(period)
            if name == "constant" and len(nums) == 1:
                return cls.constant(nums[0], period)
            if name in ("sin", "cos") and len(nums) in (1, 2):
                k = nums[1] if len(nums) == 2 else 1.0
                return getattr(cls, name)(nums[0], k, period)
            raise ValueError(f"bad profile preset {spec!r}")
        return cls.table(spec, period)

    @property
    def is_zero(self):
        return all(t[0] == "const" and t[1] == 0.0 for t in self.terms)

    @property
    def is_constant(self):
        return all(t[0] == "const" for t in self.terms)

    def __call__(self, x):
        if isinstance(x, np.ndarray):
            return self._eval_array(x)
        total = 0.0
        P = self.period
        for t in self.terms:
            kind = t[0]
            if kind == "const":
                total += t[1]
            elif kind == "sin":
                total += t[1] * math.sin(2.0 * math.pi * t[2] * x / P)
            elif kind == "cos":
                total += t[1] * math.cos(2.0 * math.pi * t[2] * x / P)
            else:
                h, c = t[1], t[2]
                u = x % P
                i = int(u / h)
                if i >= c.shape[1]:
                    i = c.shape[1] - 1
                d = u - i * h
                total += ((c[0, i] * d + c[1, i]) * d + c[2, i]) * d + c[3, i]
        return total

    def _eval_array(self, x):
        out = np.zeros_like(x, dtype=float)
        P = self.period
        for t in self.terms:
            kind = t[0]
            if kind == "const":
                out += t[1]
            elif kind == "sin":
                out += t[1] * np.sin(2.0 * np.pi * t[2] * x / P)
            elif kind == "cos":
                out += t[1] * np.cos(2.0 * np.pi * t[2] * x / P)
            else:
                out += t[3](np.mod(x, P))
        return out

    def derivative(self, x):
        """First derivative; spline terms are differentiated piecewise."""
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        P = self.period
        for t in self.terms:
            kind = t[0]
            if kind == "sin":
                w = 2.0 * np.pi * t[2] / P
                out += t[1] * w * np.cos(w * x)
            elif kind == "cos":
                w = 2.0 * np.pi * t[2] / P
                out -= t[1] * w * np.sin(w * x)
            elif kind == "table":
                out += t[3](np.mod(x, P), 1)
        return out

    def sup_norm(self, n=2048):
        x = np.linspace(0.0, self.period, n, endpoint=False)
        return float(np.max(np.abs(self._eval_array(x)))) if self.terms else 0.0

    def __add__(self, other):
        if not isinstance(other, PeriodicProfile):
            return NotImplemented
        if other.period != self.period:
            raise ValueError("cannot add profiles with different periods")
        return PeriodicProfile(self.period, self.terms + other.terms)

    def __mul__(self, c):
        c = float(c)
        terms = []
        for t in self.terms:
            if t[0] == "const":
                terms.append(("const", c * t[1]))
            elif t[0] in ("sin", "cos"):
                terms.append((t[0], c * t[1], t[2]))
            else:
                terms.append(("table", t[1], c * t[2], _scaled_spline(t[3], c)))
        return PeriodicProfile(self.period, terms)

    __rmul__ = __mul__

    def describe(self):
        """JSON-friendly description."""
        out = []
        for t in self.terms:
            if t[0] == "const":
                out.append(f"constant:{t[1]!r}")
            elif t[0] in ("sin", "cos"):
                out.append(f"{t[0]}:{t[1]!r},{t[2]!r}")
            else:
                out.append(f"table[{t[2].shape[1]}]")
        return " + ".join(out) if out else "zero"

    def __repr__(self):
        return f"PeriodicProfile({self.describe()}, period={self.period!r})"


def _scaled_spline(sp, c):
    from scipy.interpolate import PPoly
    return PPoly(c * sp.c, sp.x, extrapolate="periodic")

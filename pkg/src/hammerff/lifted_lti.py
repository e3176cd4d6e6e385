"""Discrete-time SISO transfer functions and their lifted (finite-horizon) matrices.

Coefficients are stored in ascending powers of ``z^-1``::

    H(z) = z^advance * (num[0] + num[1] z^-1 + ...) / (den[0] + den[1] z^-1 + ...)

``advance`` is a non-negative integer that makes the system noncausal
(a pure prediction of ``advance`` samples). The denominator is normalized
to ``den[0] == 1`` on construction.

Two independent routes to the finite-time response are provided:
:func:`lift` builds the Toeplitz convolution matrix from a power-series
expansion of the transfer function, while :func:`simulate` runs the
recursive difference equation through :func:`scipy.signal.lfilter`.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import signal
from scipy.linalg import toeplitz

from .errors import MalformedSystemError, StabilityError

__all__ = [
    "TransferFunction",
    "impulse_response",
    "lift",
    "simulate",
    "poles",
    "is_stable",
    "closed_loop_denominator",
    "sensitivity",
    "process_sensitivity",
    "STABILITY_MARGIN",
]

#: Poles must satisfy ``|p| < 1 - STABILITY_MARGIN`` to count as stable.
STABILITY_MARGIN = 1e-9


def _as_coeffs(values, name):
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.ndim != 1 or arr.size == 0:
        raise MalformedSystemError(f"{name} must be a non-empty 1-D coefficient list")
    if not np.all(np.isfinite(arr)):
        raise MalformedSystemError(f"{name} contains non-finite coefficients")
    return arr


@dataclass(frozen=True)
class TransferFunction:
    """Rational DT SISO system in ascending powers of ``z^-1``.

    Parameters
    ----------
    num, den : sequence of float
        Numerator and denominator coefficients. ``den[0]`` must be nonzero.
    sample_time : float
        Sampling time in seconds.
    advance : int
        Number of samples of pure prediction (``z^advance``); 0 for causal systems.
    """

    num: tuple
    den: tuple
    sample_time: float = 1.0
    advance: int = 0

    def __post_init__(self):
        num = _as_coeffs(self.num, "num")
        den = _as_coeffs(self.den, "den")
        if den[0] == 0.0:
            raise MalformedSystemError("den[0] must be nonzero")
        if not self.sample_time > 0:
            raise MalformedSystemError("sample_time must be positive")
        if int(self.advance) != self.advance or self.advance < 0:
            raise MalformedSystemError("advance must be a non-negative integer")
        d0 = den[0]
        object.__setattr__(self, "num", tuple(float(c) for c in num / d0))
        object.__setattr__(self, "den", tuple(float(c) for c in den / d0))
        object.__setattr__(self, "advance", int(self.advance))

    # -- construction helpers -------------------------------------------------
    @classmethod
    def gain(cls, k, sample_time=1.0):
        return cls((k,), (1.0,), sample_time)

    @classmethod
    def delay(cls, n=1, sample_time=1.0):
        return cls((0.0,) * n + (1.0,), (1.0,), sample_time)

    @classmethod
    def from_dict(cls, d):
        """Build from ``{"num": [...], "den": [...], "ts": ..., "advance": 0}``."""
        try:
            return cls(tuple(d["num"]), tuple(d["den"]), float(d.get("ts", 1.0)),
                       int(d.get("advance", 0)))
        except KeyError as exc:
            raise MalformedSystemError(f"transfer function dict lacks key {exc}") from None

    def to_dict(self):
        out = {"num": list(self.num), "den": list(self.den), "ts": self.sample_time}
        if self.advance:
            out["advance"] = self.advance
        return out

    # -- properties -----------------------------------------------------------
    @property
    def is_causal(self):
        return self.advance == 0

    @property
    def relative_degree(self):
        """Number of leading zero numerator coefficients minus the advance.

        Returns ``None`` for the zero system.
        """
        nz = np.flatnonzero(self.num)
        if nz.size == 0:
            return None
        return int(nz[0]) - self.advance

    @property
    def is_strictly_proper(self):
        rd = self.relative_degree
        return rd is None or rd >= 1

    @property
    def is_zero(self):
        return not any(self.num)

    # -- algebra --------------------------------------------------------------
    def _check_ts(self, other):
        if not np.isclose(self.sample_time, other.sample_time, rtol=1e-12, atol=0.0):
            raise MalformedSystemError("sample times differ")

    def __mul__(self, other):
        if isinstance(other, TransferFunction):
            self._check_ts(other)
            return TransferFunction(np.convolve(self.num, other.num),
                                    np.convolve(self.den, other.den),
                                    self.sample_time, self.advance + other.advance)
        k = float(other)
        return TransferFunction(np.asarray(self.num) * k, self.den, self.sample_time, self.advance)

    __rmul__ = __mul__

    def __add__(self, other):
        if not isinstance(other, TransferFunction):
            other = TransferFunction.gain(float(other), self.sample_time)
        self._check_ts(other)
        if self.advance or other.advance:
            raise MalformedSystemError("addition of noncausal systems is not supported")
        a = np.convolve(self.num, other.den)
        b = np.convolve(other.num, self.den)
        n = max(a.size, b.size)
        num = np.pad(a, (0, n - a.size)) + np.pad(b, (0, n - b.size))
        return TransferFunction(num, np.convolve(self.den, other.den), self.sample_time)

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def frequency_response(self, freqs_hz):
        """Complex response at the given frequencies in Hz."""
        w = 2 * np.pi * np.asarray(freqs_hz, dtype=float) * self.sample_time
        zinv = np.exp(-1j * w)
        num = np.polynomial.polynomial.polyval(zinv, self.num)
        den = np.polynomial.polynomial.polyval(zinv, self.den)
        return num / den * np.exp(1j * w * self.advance)


def poles(sys):
    """Poles of ``sys`` in the z-plane (companion-matrix eigenvalues of the denominator)."""
    den = np.trim_zeros(np.asarray(sys.den), "b")
    if den.size <= 1:
        return np.zeros(0, dtype=complex)
    # den ascending in z^-1 equals the z-polynomial in descending powers.
    return np.roots(den)


def is_stable(sys, margin=STABILITY_MARGIN):
    p = poles(sys)
    return bool(np.all(np.abs(p) < 1.0 - margin))


def impulse_response(sys, horizon):
    """First ``horizon`` samples ``h(0), ..., h(N-1)`` of the causal part of ``sys``.

    The advance is ignored here; :func:`lift` accounts for it. Computed by
    power-series long division of ``num / den``.
    """
    horizon = int(horizon)
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if not isinstance(sys, TransferFunction):
        raise MalformedSystemError("expected a TransferFunction")
    if np.any(np.abs(poles(sys)) > 1.0 + 1e-6):
        warnings.warn("impulse response of an unstable system; truncation is not meaningful",
                      RuntimeWarning, stacklevel=2)
    num = np.zeros(horizon)
    b = np.asarray(sys.num)[:horizon]
    num[: b.size] = b
    a = np.asarray(sys.den)
    h = np.zeros(horizon)
    # den is monic: h[t] = b[t] - sum_{k>=1} a[k] h[t-k]
    for t in range(horizon):
        k = min(t, a.size - 1)
        acc = num[t]
        if k:
            acc -= np.dot(a[1:k + 1], h[t - 1::-1][:k])
        h[t] = acc
    return h


def lift(sys, horizon):
    """N x N Toeplitz convolution matrix of ``sys`` with zero initial/final conditions.

    Entry ``[t, k]`` is ``h(t - k)``, where ``h`` may be nonzero for negative
    arguments when ``sys.advance > 0``. The result is read-only.
    """
    horizon = int(horizon)
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    a = sys.advance
    hc = impulse_response(sys, horizon + a)
    # h(l) = hc(l + a); column holds l = 0..N-1, row holds l = 0, -1, ..., 1-N
    col = hc[a:a + horizon]
    row = np.zeros(horizon)
    neg = hc[:a + 1][::-1]  # h(0), h(-1), ..., h(-a)
    m = min(neg.size, horizon)
    row[:m] = neg[:m]
    H = toeplitz(col, row)
    H.setflags(write=False)
    return H


def simulate(sys, u):
    """Zero-initial-condition response of a causal ``sys`` to input ``u``."""
    u = np.asarray(u, dtype=float)
    if u.ndim != 1:
        raise ValueError("input must be a 1-D signal")
    if not sys.is_causal:
        raise MalformedSystemError("simulate requires a causal system; use lift for noncausal ones")
    return signal.lfilter(np.asarray(sys.num), np.asarray(sys.den), u)


def closed_loop_denominator(plant, controller):
    """Characteristic polynomial ``A_P A_C + B_P B_C`` (ascending ``z^-1``)."""
    if not (plant.is_causal and controller.is_causal):
        raise MalformedSystemError("feedback loop requires causal plant and controller")
    plant._check_ts(controller)
    a = np.convolve(plant.den, controller.den)
    b = np.convolve(plant.num, controller.num)
    n = max(a.size, b.size)
    return np.pad(a, (0, n - a.size)) + np.pad(b, (0, n - b.size))


def _checked_loop(plant, controller):
    cl = closed_loop_denominator(plant, controller)
    if cl[0] == 0.0:
        raise MalformedSystemError("algebraic loop: 1 + P(inf) C(inf) = 0")
    cl_tf = TransferFunction((1.0,), cl, plant.sample_time)
    p = poles(cl_tf)
    mod = np.abs(p)
    if np.any(mod >= 1.0 - STABILITY_MARGIN):
        bad = np.sort(mod[mod >= 1.0 - STABILITY_MARGIN])[::-1]
        raise StabilityError(
            f"closed loop unstable: pole moduli {np.array2string(bad, precision=6)}", bad)
    return cl


def sensitivity(plant, controller):
    """Sensitivity ``S = 1 / (1 + P C)``; raises :class:`StabilityError` if the loop is unstable."""
    cl = _checked_loop(plant, controller)
    return TransferFunction(np.convolve(plant.den, controller.den), cl, plant.sample_time)


def process_sensitivity(plant, controller):
    """Process sensitivity ``S P = P / (1 + P C)``."""
    cl = _checked_loop(plant, controller)
    return TransferFunction(np.convolve(plant.num, controller.den), cl, plant.sample_time)

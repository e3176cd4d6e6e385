"""Simulated Hammerstein servo: saturation ``g`` in front of an LTI plant ``P`` in feedback with ``C``.

One trial is simulated sample by sample::

    y_m[t] = (P x)[t] + n[t]          (P strictly proper: uses x[<t] only)
    e[t]   = r[t] - y_m[t]
    u[t]   = (C e)[t] + f[t]
    x[t]   = g(u[t]) = I_max tanh(u[t] / I_max)

Measurement noise is i.i.d. Gaussian with standard deviation
``sqrt(noise_variance_rel) * noise_scale`` (``noise_scale`` is the motion
distance of the first reference), drawn from NumPy's PCG64 ``Generator``
seeded through ``SeedSequence``. Unless a trial-specific ``noise_seed`` is
passed, the realization depends on ``cfg.seed`` only, so every trial run with
the same config sees the same noise sequence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import signal

from .csvio import write_columns
from .errors import ConfigurationError
from .lifted_lti import TransferFunction, closed_loop_denominator, is_stable, poles

__all__ = [
    "SaturationModel",
    "PlantConfig",
    "TrialRecord",
    "saturate",
    "make_noise",
    "run_trial",
    "discretize_zoh",
    "two_mass_plant",
    "lead_lag_controller",
    "loop_metrics",
]


@dataclass(frozen=True)
class SaturationModel:
    """Magnetic saturation ``g(u) = i_max * tanh(u / i_max)`` [A]."""

    i_max: float = 70.0

    def __post_init__(self):
        if not self.i_max > 0:
            raise ConfigurationError("i_max must be positive")

    def __call__(self, u):
        return saturate(self, u)


def saturate(model, u):
    """Element-wise ``I_max tanh(u / I_max)``; ``model=None`` is the identity."""
    u = np.asarray(u, dtype=float)
    if model is None:
        return u.copy()
    return model.i_max * np.tanh(u / model.i_max)


def make_noise(seed, variance, n):
    """``n`` i.i.d. N(0, variance) samples, reproducible per ``seed`` (int or tuple of ints)."""
    if variance < 0:
        raise ValueError("variance must be >= 0")
    if variance == 0:
        return np.zeros(int(n))
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    return np.sqrt(variance) * rng.standard_normal(int(n))


@dataclass(frozen=True)
class PlantConfig:
    linear_plant: TransferFunction
    controller: TransferFunction
    saturation: SaturationModel | None = field(default_factory=SaturationModel)
    noise_variance_rel: float = 7.5e-6
    noise_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.noise_variance_rel < 0:
            raise ConfigurationError("noise_variance_rel must be >= 0")
        if not self.linear_plant.is_causal or not self.controller.is_causal:
            raise ConfigurationError("plant and controller must be causal")

    @property
    def noise_variance(self):
        """Absolute output-noise variance in m^2."""
        return self.noise_variance_rel * self.noise_scale ** 2

    @property
    def sample_time(self):
        return self.linear_plant.sample_time

    def without_saturation(self):
        return replace(self, saturation=None)

    def without_noise(self):
        return replace(self, noise_variance_rel=0.0)

    @classmethod
    def from_dict(cls, d):
        sat = d.get("saturation", {"i_max": 70.0})
        return cls(
            linear_plant=TransferFunction.from_dict(d["linear_plant"]),
            controller=TransferFunction.from_dict(d["controller"]),
            saturation=None if sat is None else SaturationModel(float(sat["i_max"])),
            noise_variance_rel=float(d.get("noise_variance_rel", 7.5e-6)),
            noise_scale=float(d.get("noise_scale", 1.0)),
            seed=int(d.get("seed", 0)),
        )

    def to_dict(self):
        return {
            "linear_plant": self.linear_plant.to_dict(),
            "controller": self.controller.to_dict(),
            "saturation": None if self.saturation is None else {"i_max": self.saturation.i_max},
            "noise_variance_rel": self.noise_variance_rel,
            "noise_scale": self.noise_scale,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class TrialRecord:
    r: np.ndarray
    f: np.ndarray
    u: np.ndarray
    x: np.ndarray
    y: np.ndarray
    e: np.ndarray
    trial_index: int = 0

    def __len__(self):
        return self.r.size

    @property
    def error_norm(self):
        return float(np.linalg.norm(self.e))

    def to_csv(self, path, sample_time=1.0):
        """Write columns ``t, r, f, u, x, y, e`` with 17 significant digits."""
        cols = [np.arange(self.r.size) * sample_time, self.r, self.f, self.u, self.x, self.y, self.e]
        write_columns(path, ["t", "r", "f", "u", "x", "y", "e"], cols)


def _df2t_coeffs(tf):
    b = np.asarray(tf.num, dtype=float)
    a = np.asarray(tf.den, dtype=float)
    n = max(b.size, a.size)
    return np.pad(b, (0, n - b.size)).tolist(), np.pad(a, (0, n - a.size)).tolist()


def run_trial(cfg, r, f, trial_index=0, noise_seed=None):
    """Simulate one closed-loop trial.

    Parameters
    ----------
    cfg : PlantConfig
    r, f : array_like
        Reference [m] and feedforward [A], equal length.
    trial_index : int
        Stored in the record.
    noise_seed : int or tuple of int, optional
        Seed of the measurement noise; defaults to ``cfg.seed``.
    """
    r = np.asarray(r, dtype=float)
    f = np.asarray(f, dtype=float)
    if r.shape != f.shape or r.ndim != 1:
        raise ValueError("r and f must be 1-D signals of equal length")
    if not cfg.linear_plant.is_strictly_proper:
        raise ConfigurationError("linear plant must be strictly proper for sample-by-sample simulation")
    N = r.size
    seed = cfg.seed if noise_seed is None else noise_seed
    noise = make_noise(seed, cfg.noise_variance, N)

    pb, pa = _df2t_coeffs(cfg.linear_plant)
    cb, ca = _df2t_coeffs(cfg.controller)
    npz, ncz = len(pb) - 1, len(cb) - 1
    zp = [0.0] * npz
    zc = [0.0] * ncz
    imax = None if cfg.saturation is None else cfg.saturation.i_max
    tanh = math.tanh

    y = np.empty(N)
    e = np.empty(N)
    u = np.empty(N)
    x = np.empty(N)
    rl, fl, nl = r.tolist(), f.tolist(), noise.tolist()
    for t in range(N):
        yt = zp[0] if npz else 0.0
        ym = yt + nl[t]
        et = rl[t] - ym
        # controller, direct form II transposed
        uc = cb[0] * et + (zc[0] if ncz else 0.0)
        for i in range(ncz - 1):
            zc[i] = cb[i + 1] * et + zc[i + 1] - ca[i + 1] * uc
        if ncz:
            zc[ncz - 1] = cb[ncz] * et - ca[ncz] * uc
        ut = uc + fl[t]
        xt = ut if imax is None else imax * tanh(ut / imax)
        # plant state update with x[t]; pb[0] == 0
        for i in range(npz - 1):
            zp[i] = pb[i + 1] * xt + zp[i + 1] - pa[i + 1] * yt
        if npz:
            zp[npz - 1] = pb[npz] * xt - pa[npz] * yt
        y[t] = ym
        e[t] = et
        u[t] = ut
        x[t] = xt
    return TrialRecord(r=r.copy(), f=f.copy(), u=u, x=x, y=y, e=e, trial_index=int(trial_index))


# -- surrogate construction ----------------------------------------------------

def discretize_zoh(num_s, den_s, ts):
    """Zero-order-hold discretization of a continuous-time SISO system."""
    bd, ad, _ = signal.cont2discrete((np.asarray(num_s, float), np.asarray(den_s, float)), ts,
                                     method="zoh")
    bd = np.atleast_1d(np.squeeze(bd))
    ad = np.atleast_1d(np.squeeze(ad))
    n = max(bd.size, ad.size)
    # equal-length descending-z arrays read as ascending z^-1 coefficients
    bd = np.pad(bd, (n - bd.size, 0))
    ad = np.pad(ad, (n - ad.size, 0))
    bd[np.abs(bd) < 1e-14 * np.abs(bd).max()] = 0.0
    return TransferFunction(bd, ad, ts)


def two_mass_plant(ts, mass=1.0, motor_constant=1.0, load_fraction=0.1, flex_freq=150.0,
                   flex_damping=0.02, parasitic_freq=0.0, parasitic_damping=0.2):
    """Collocated two-mass servo from current [A] to motor position [m], ZOH-discretized.

    Modal form::

        P(s) = K/m [ 1/(s^2 + 2 z_p w_p s + w_p^2) + (lam/(1-lam)) / (s^2 + 2 z_f w_f s + w_f^2) ]

    The first term is the rigid-body mode, optionally with a weak parasitic
    stiffness ``w_p`` (cable slab or guide flexure); ``parasitic_freq=0``
    gives a free mass ``K/(m s^2)``. The second term is the flexible mode of a
    load carrying ``load_fraction`` of the total mass.

    Returns
    -------
    (TransferFunction, dict)
        The discrete plant and the continuous-time ``(num, den)`` polynomials.
    """
    if not 0 <= load_fraction < 1:
        raise ConfigurationError("load_fraction must lie in [0, 1)")
    k = motor_constant / mass
    wp = 2 * np.pi * parasitic_freq
    wf = 2 * np.pi * flex_freq
    rigid = np.array([1.0, 2 * parasitic_damping * wp, wp ** 2])
    flex = np.array([1.0, 2 * flex_damping * wf, wf ** 2])
    resid = load_fraction / (1.0 - load_fraction)
    num = k * np.polyadd(flex, resid * rigid)
    den = np.polymul(rigid, flex)
    return discretize_zoh(num, den, ts), {"num": num.tolist(), "den": den.tolist()}


def lead_lag_controller(ts, plant_ct, crossover=20.0, lead_ratio=3.0, integrator_ratio=5.0,
                        lowpass_ratio=6.0):
    """Lead filter + PI (lag) + first-order low-pass, Tustin-discretized.

    ``C(s) = k (1 + s/w_z)/(1 + s/w_p) * (s + w_i)/s * 1/(1 + s/w_lp)`` with
    ``w_z = w_c/lead_ratio``, ``w_p = w_c*lead_ratio``, ``w_i = w_c/integrator_ratio``,
    ``w_lp = w_c*lowpass_ratio``. The gain ``k`` puts ``|P C| = 1`` at ``crossover`` Hz
    using the continuous-time plant ``plant_ct = (num, den)``.
    """
    wc = 2 * np.pi * crossover
    wz, wpl = wc / lead_ratio, wc * lead_ratio
    num = np.polymul([1 / wz, 1.0], [1.0, wc / integrator_ratio]) if integrator_ratio else [1 / wz, 1.0]
    den = np.polymul([1 / wpl, 1.0], [1 / (wc * lowpass_ratio), 1.0])
    if integrator_ratio:
        den = np.polymul(den, [1.0, 0.0])
    _, pj = signal.freqs(plant_ct[0], plant_ct[1], [wc])
    _, cj = signal.freqs(num, den, [wc])
    k = 1.0 / abs(pj[0] * cj[0])
    bz, az = signal.bilinear(k * np.asarray(num), den, fs=1.0 / ts)
    n = max(bz.size, az.size)
    bz = np.pad(bz, (n - bz.size, 0))
    az = np.pad(az, (n - az.size, 0))
    return TransferFunction(bz, az, ts)


def loop_metrics(plant, controller, n_freq=20000):
    """Crossover frequency, peak sensitivity and closed-loop pole radius.

    Returns a dict with ``bandwidth_hz`` (first 0 dB crossing of ``|PC|``),
    ``max_sensitivity`` (``max |S|``), ``modulus_margin_db`` (``-20 log10 max|S|``
    expressed as a positive margin in dB of ``max|S|``), ``max_pole_modulus``
    and ``stable``.
    """
    ts = plant.sample_time
    freqs = np.linspace(0.0, 0.5 / ts, n_freq + 1)[1:]
    L = plant.frequency_response(freqs) * controller.frequency_response(freqs)
    S = 1.0 / (1.0 + L)
    mag = np.abs(L)
    idx = np.flatnonzero((mag[:-1] >= 1.0) & (mag[1:] < 1.0))
    bw = float(freqs[idx[0]]) if idx.size else float("nan")
    cl = TransferFunction((1.0,), closed_loop_denominator(plant, controller), ts)
    pm = np.abs(poles(cl))
    smax = float(np.max(np.abs(S)))
    return {
        "bandwidth_hz": bw,
        "max_sensitivity": smax,
        "max_sensitivity_db": float(20 * np.log10(smax)),
        "max_pole_modulus": float(pm.max()) if pm.size else 0.0,
        "stable": is_stable(cl),
    }

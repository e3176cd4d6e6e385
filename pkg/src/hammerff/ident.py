"""Wiener feedforward ``f = phi * atanh(F(theta) r / phi)`` and its two identification paths.

* Proposed: fit ``(theta, phi)`` so that the feedforward reproduces a converged
  NOILC signal in the closed-loop error sense,
  ``K = || SP (f_NOILC - h(F(theta) r, phi)) ||_W^2``.
* Classical: fit the forward Hammerstein model ``y_hat = P~(theta) g~(u, phi)``
  with ``P~ = z^-preview / F(theta)`` and ``g~ = phi tanh(. / phi)`` to open-loop
  white-noise data, then invert it.

Both fits run the same particle swarm. Infeasible candidates (``phi <= 0`` or
``|F(theta) r| >= phi`` anywhere) get a finite penalty so the swarm stays
unconstrained.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from . import pso
from .errors import ConfigurationError, DomainError, ExcitationError
from .ilc import NoilcLearner, basis_matrix, noilc_train
from .lifted_lti import lift, process_sensitivity
from .plant import make_noise, saturate

__all__ = [
    "FeedforwardParams",
    "IdDataset",
    "FitResult",
    "wiener_ff",
    "proposed_cost",
    "classical_cost",
    "fit_proposed",
    "fit_classical",
    "build_training_dataset",
    "open_loop_dataset",
    "phi_sensitivity",
    "PENALTY",
    "PHI_SENSITIVITY_MIN",
]

#: cost assigned per unit of atanh-domain violation (plus one unit for any violation)
PENALTY = 1e12
#: relative model-output change from doubling phi below which phi counts as unidentifiable
PHI_SENSITIVITY_MIN = 1e-2


@dataclass(frozen=True)
class FeedforwardParams:
    """Rigid-body gains ``theta = (velocity, acceleration)`` and saturation level ``phi`` [A].

    ``preview`` advances the reference before differencing (0 for the plain filter).
    """

    theta: tuple
    phi: float
    preview: int = 0

    def __post_init__(self):
        th = tuple(float(v) for v in np.asarray(self.theta, dtype=float).reshape(-1))
        if len(th) != 2:
            raise ConfigurationError("theta must have two entries")
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "phi", float(self.phi))
        if not self.phi > 0:
            raise ConfigurationError("phi must be positive")
        if self.preview < 0:
            raise ConfigurationError("preview must be >= 0")

    @classmethod
    def from_vector(cls, x, preview=0):
        return cls((x[0], x[1]), x[2], preview)

    def to_dict(self):
        return {"theta": list(self.theta), "phi": self.phi, "preview": self.preview}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["theta"]), d["phi"], int(d.get("preview", 0)))

    def linear_ff(self, r):
        """``F(theta) r``."""
        return basis_matrix(r, self.preview) @ np.asarray(self.theta)


def wiener_ff(params, r):
    """Feedforward ``phi * atanh(F(theta) r / phi)``.

    Raises
    ------
    DomainError
        If ``|F(theta) r[t]| >= phi`` for some sample ``t``.
    """
    v = params.linear_ff(r)
    z = v / params.phi
    bad = np.flatnonzero(np.abs(z) >= 1.0)
    if bad.size:
        t = int(bad[0])
        raise DomainError(
            f"|F(theta) r| = {abs(v[t]):.6g} A >= phi = {params.phi:.6g} A at sample {t}", t)
    return params.phi * np.arctanh(z)


@dataclass
class IdDataset:
    """Identification data.

    ``variant == "noilc_feedforward"``: ``signal_in`` is the training reference,
    ``signal_out`` the converged NOILC feedforward and ``lifted_sp`` the lifted
    process sensitivity. ``variant == "open_loop_noise"``: ``signal_in`` is the
    plant input ``u`` and ``signal_out`` the measured output ``y``.
    ``weight=None`` means identity.
    """

    variant: str
    signal_in: np.ndarray
    signal_out: np.ndarray
    sample_time: float
    weight: np.ndarray | None = None
    lifted_sp: np.ndarray | None = None
    preview: int = 0
    error_history: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.variant not in ("noilc_feedforward", "open_loop_noise"):
            raise ConfigurationError(f"unknown dataset variant {self.variant!r}")
        self.signal_in = np.asarray(self.signal_in, dtype=float)
        self.signal_out = np.asarray(self.signal_out, dtype=float)
        n = self.signal_in.size
        if self.signal_out.size != n:
            raise ConfigurationError("input and output signals differ in length")
        if self.weight is not None:
            W = np.asarray(self.weight, dtype=float)
            if W.shape != (n, n) or not np.allclose(W, W.T):
                raise ConfigurationError("weight must be a symmetric N x N matrix")
            self.weight = W
        if self.variant == "noilc_feedforward":
            if self.lifted_sp is None or np.shape(self.lifted_sp) != (n, n):
                raise ConfigurationError("proposed dataset needs an N x N lifted SP")

    def __len__(self):
        return self.signal_in.size


@dataclass
class FitResult:
    params: FeedforwardParams
    final_cost: float
    feasible: bool
    converged: bool
    phi_sensitivity: float
    optim: pso.OptimResult = field(repr=False)

    @property
    def phi_identifiable(self):
        return self.phi_sensitivity >= PHI_SENSITIVITY_MIN

    def report(self):
        """JSON-ready fit summary."""
        return {
            "theta": list(self.params.theta),
            "phi": self.params.phi,
            "preview": self.params.preview,
            "final_cost": self.final_cost,
            "iterations": int(self.optim.iterations),
            "feasible": bool(self.feasible),
            "converged": bool(self.converged),
            "phi_sensitivity": self.phi_sensitivity,
            "phi_identifiable": bool(self.phi_identifiable),
            "optimizer_trace_summary": self.optim.summary(),
        }


# -- proposed path ---------------------------------------------------------------

def _weighted_sq(R, W):
    if W is None:
        return np.einsum("ij,ij->j", R, R)
    return np.einsum("ij,ij->j", R, W @ R)


def proposed_cost(data):
    """Vectorized ``K(theta, phi)`` for a swarm ``X`` of shape ``(n, 3)``."""
    if data.variant != "noilc_feedforward":
        raise ConfigurationError("proposed fit needs a noilc_feedforward dataset")
    Psi = basis_matrix(data.signal_in, data.preview)
    J = np.asarray(data.lifted_sp)
    Jf = J @ data.signal_out
    W = data.weight

    def cost(X):
        X = np.atleast_2d(X)
        theta, phi = X[:, :2], X[:, 2]
        V = Psi @ theta.T
        excess = np.abs(V) - phi
        viol = np.maximum(excess, 0.0).sum(axis=0)
        infeasible = (phi <= 0) | (excess >= 0).any(axis=0)
        safe_phi = np.where(infeasible, 1.0, phi)
        Z = np.where(infeasible, 0.0, V / safe_phi)
        H = safe_phi * np.arctanh(Z)
        K = _weighted_sq(Jf[:, None] - J @ H, W)
        return np.where(infeasible, PENALTY * (1.0 + viol + np.maximum(-phi, 0.0)), K)

    return cost


def fit_proposed(data, config):
    """Minimize ``K`` with the particle swarm ``config``.

    Raises
    ------
    DomainError
        If the best point found violates the atanh domain on the training reference.
    """
    cost = proposed_cost(data)
    res = pso.minimize(cost, config, vectorized=True)
    return _finish(res, data, _proposed_output(data))


def _proposed_output(data):
    Psi = basis_matrix(data.signal_in, data.preview)
    J = np.asarray(data.lifted_sp)

    def out(theta, phi):
        v = Psi @ theta
        with np.errstate(invalid="ignore", divide="ignore"):
            return J @ (phi * np.arctanh(np.clip(v / phi, -1 + 1e-15, 1 - 1e-15)))

    return out


def _finish(res, data, model_output):
    x = res.best_point
    feasible = res.best_cost < PENALTY and x[2] > 0
    if not feasible:
        raise DomainError(
            f"optimizer ended on an infeasible point theta={x[:2].tolist()}, phi={x[2]!r} "
            f"(cost {res.best_cost:.3g}); widen the search box or check the data")
    if not res.converged:
        warnings.warn("particle swarm hit max_iterations before stagnating; best point returned",
                      RuntimeWarning, stacklevel=3)
    params = FeedforwardParams.from_vector(x, data.preview)
    sens = phi_sensitivity(model_output, params)
    return FitResult(params=params, final_cost=float(res.best_cost), feasible=True,
                     converged=bool(res.converged), phi_sensitivity=sens, optim=res)


def phi_sensitivity(model_output, params):
    """Relative change of the fitted model output when ``phi`` is doubled, ``theta`` fixed.

    Near zero when the data never drive the nonlinearity, i.e. the cost is flat in ``phi``.
    """
    th = np.asarray(params.theta)
    a = model_output(th, params.phi)
    b = model_output(th, 2.0 * params.phi)
    na = np.linalg.norm(a)
    return float(np.linalg.norm(a - b) / na) if na > 0 else 0.0


def build_training_dataset(cfg, r_train, iterations=10, alpha=1.0, eps_rel=None, eps=None,
                           preview=0, seed_key=("noilc",), fresh_noise=False):
    """Run NOILC on ``r_train`` and package ``(r, f_NOILC, SP, W = I)``."""
    r_train = np.asarray(r_train, dtype=float)
    n = r_train.size
    J = lift(process_sensitivity(cfg.linear_plant, cfg.controller), n)
    kw = {} if eps_rel is None else {"eps_rel": eps_rel}
    learner = NoilcLearner(J, alpha=alpha, eps=eps, **kw)
    f, hist = noilc_train(learner, cfg, r_train, iterations, seed_key=_key(seed_key),
                          fresh_noise=fresh_noise)
    return IdDataset("noilc_feedforward", r_train, f, cfg.sample_time, weight=None,
                     lifted_sp=J, preview=preview, error_history=hist)


def _key(seed_key):
    # strings are hashed to stable integers so they can enter a SeedSequence
    return tuple(int.from_bytes(k.encode(), "little") % (2 ** 32) if isinstance(k, str) else int(k)
                 for k in seed_key)


# -- classical path --------------------------------------------------------------

def open_loop_dataset(cfg, n, amplitude_rel=0.7, seed_key=("classical",), preview=0):
    """White-noise open-loop experiment ``y = P g(u) + noise``.

    ``u`` is zero-mean Gaussian with standard deviation ``amplitude_rel * I_max``.
    """
    if cfg.saturation is None:
        raise ConfigurationError("open-loop dataset needs a saturation model for the amplitude")
    key = _key(seed_key)
    rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, *key, 0)))
    u = amplitude_rel * cfg.saturation.i_max * rng.standard_normal(int(n))
    x = saturate(cfg.saturation, u)
    y = signal.lfilter(cfg.linear_plant.num, cfg.linear_plant.den, x)
    y = y + make_noise((cfg.seed, *key, 1), cfg.noise_variance, int(n))
    return IdDataset("open_loop_noise", u, y, cfg.sample_time, preview=preview)


def _forward_model(u, theta, phi, preview):
    t1, t2 = theta
    den = [t1 + t2, -t1 - 2 * t2, t2]
    b = np.zeros(preview + 1)
    b[-1] = 1.0
    return signal.lfilter(b, den, phi * np.tanh(u / phi))


def classical_cost(data):
    """Per-particle prediction-error cost ``||y - P~ g~(u)||^2``."""
    if data.variant != "open_loop_noise":
        raise ConfigurationError("classical fit needs an open_loop_noise dataset")
    u, y, p = data.signal_in, data.signal_out, data.preview
    scale = float(np.dot(y, y)) + 1.0

    def cost(x):
        t1, t2, phi = (float(v) for v in x)
        if phi <= 0:
            return PENALTY * (1.0 - phi)
        if abs(t1 + t2) < 1e-300:
            return PENALTY
        with np.errstate(over="ignore", invalid="ignore"):
            yh = _forward_model(u, (t1, t2), phi, p)
            v = float(np.dot(y - yh, y - yh))
        # diverging simulations (unstable 1/F) are penalized like infeasible points
        return v if np.isfinite(v) and v < PENALTY * scale else PENALTY

    return cost


def check_excitation(data, cond_max=1e8):
    """Condition number of the normalized linear regressor ``[Delta y, Delta^2 y]``.

    Raises
    ------
    ExcitationError
        If it exceeds ``cond_max``.
    """
    Phi = basis_matrix(data.signal_out)
    norms = np.linalg.norm(Phi, axis=0)
    if np.any(norms == 0):
        raise ExcitationError("output data are constant; no excitation")
    c = float(np.linalg.cond(Phi / norms))
    if c > cond_max:
        raise ExcitationError(f"regressor condition number {c:.3g} exceeds {cond_max:.3g}")
    return c


def fit_classical(data, config, map_fn=None):
    """Prediction-error fit of the forward Hammerstein model with the particle swarm."""
    check_excitation(data)
    res = pso.minimize(classical_cost(data), config, map_fn=map_fn)
    u, p = data.signal_in, data.preview
    return _finish(res, data, lambda th, phi: _forward_model(u, th, phi, p))

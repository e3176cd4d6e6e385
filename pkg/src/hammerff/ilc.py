"""Norm-optimal ILC on the raw feedforward signal and basis-function ILC on rigid-body gains.

Both learners use a lifted model ``J`` of the process sensitivity ``SP`` of
the linear plant; the saturation is deliberately left out of the model.
"""
from __future__ import annotations

import numpy as np
from scipy import linalg

from .errors import DegenerateBasisError, SingularNormalMatrixError
from .lifted_lti import TransferFunction
from .plant import run_trial

__all__ = [
    "NoilcLearner",
    "noilc_update",
    "noilc_train",
    "difference_filter",
    "rigid_body_filter",
    "preview_shift",
    "basis_matrix",
    "bfilc_update",
]

#: default Tikhonov term relative to ``trace(J^T J) / N``
DEFAULT_EPS_REL = 1e-10


def _check_weight(weight, n):
    if weight is None:
        return None
    W = np.asarray(weight, dtype=float)
    if W.shape != (n, n):
        raise ValueError(f"weight must be {n}x{n}")
    if not np.allclose(W, W.T, rtol=1e-12, atol=0.0):
        raise ValueError("weight must be symmetric")
    return W


class NoilcLearner:
    """Closed-form norm-optimal ILC.

    ``f_{j+1} = f_j + alpha (J^T W J + eps I)^{-1} J^T W e_j``

    Parameters
    ----------
    model_sp : ndarray, shape (N, N)
        Lifted process sensitivity ``J``.
    weight : ndarray, optional
        Symmetric positive-definite error weight; identity if omitted.
    alpha : float
        Learning gain in (0, 1].
    eps : float, optional
        Absolute Tikhonov term. Defaults to ``eps_rel * trace(J^T W J) / N``.
    eps_rel : float
        Relative Tikhonov term used when ``eps`` is not given.
    """

    def __init__(self, model_sp, weight=None, alpha=1.0, eps=None, eps_rel=DEFAULT_EPS_REL):
        J = np.asarray(model_sp, dtype=float)
        if J.ndim != 2 or J.shape[0] != J.shape[1]:
            raise ValueError("model_sp must be square")
        if not 0 < alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        n = J.shape[0]
        W = _check_weight(weight, n)
        JtW = J.T if W is None else J.T @ W
        G = JtW @ J
        if eps is None:
            if eps_rel < 0:
                raise ValueError("eps_rel must be >= 0")
            eps = eps_rel * np.trace(G) / n
        if eps < 0:
            raise ValueError("eps must be >= 0")
        G[np.diag_indices(n)] += eps
        try:
            c = linalg.cho_factor(G, lower=True, check_finite=False)
        except linalg.LinAlgError:
            raise SingularNormalMatrixError(
                "normal matrix J^T W J + eps I is not positive definite; use eps > 0") from None
        d = np.abs(np.diag(c[0]))
        if eps == 0 and d.min() <= np.sqrt(n * np.finfo(float).eps) * d.max():
            raise SingularNormalMatrixError(
                "normal matrix J^T W J + eps I is numerically singular; use eps > 0")
        self.model_sp = J
        self.weight = W
        self.alpha = float(alpha)
        self.eps = float(eps)
        self.gain = linalg.cho_solve(c, JtW, check_finite=False)
        self.gain.setflags(write=False)

    @property
    def horizon(self):
        return self.model_sp.shape[0]


def noilc_update(learner, trial):
    """Feedforward for the next trial given the last :class:`TrialRecord`."""
    if len(trial) != learner.horizon:
        raise ValueError(f"trial length {len(trial)} does not match model horizon {learner.horizon}")
    return trial.f + learner.alpha * (learner.gain @ trial.e)


def noilc_train(learner, cfg, r, iterations, f0=None, seed_key=(), fresh_noise=False):
    """Alternate trials and updates starting from ``f0`` (zero by default).

    Every trial uses the noise seed ``(cfg.seed, *seed_key)``, i.e. the same
    realization; with ``fresh_noise=True`` trial ``j`` uses ``(cfg.seed, *seed_key, j)``.

    Returns
    -------
    f : ndarray
        Feedforward after ``iterations`` updates.
    history : ndarray
        ``||e_j||_2`` of the ``iterations`` executed trials.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    r = np.asarray(r, dtype=float)
    f = np.zeros_like(r) if f0 is None else np.asarray(f0, dtype=float).copy()
    history = np.empty(iterations)
    for j in range(iterations):
        key = (cfg.seed, *seed_key, j) if fresh_noise else (cfg.seed, *seed_key)
        rec = run_trial(cfg, r, f, trial_index=j, noise_seed=key)
        history[j] = rec.error_norm
        f = noilc_update(learner, rec)
    return f, history


# -- basis functions -------------------------------------------------------------

def difference_filter(order, sample_time=1.0):
    """``(1 - z^-1)^order``."""
    num = np.array([1.0])
    for _ in range(order):
        num = np.convolve(num, [1.0, -1.0])
    return TransferFunction(num, (1.0,), sample_time)


def rigid_body_filter(theta, sample_time=1.0, preview=0):
    """``F(theta) = z^preview [theta1 (1 - z^-1) + theta2 (1 - z^-1)^2]``."""
    t1, t2 = (float(v) for v in theta)
    return TransferFunction((t1 + t2, -t1 - 2 * t2, t2), (1.0,), sample_time, advance=preview)


def preview_shift(r, preview):
    """``r`` advanced by ``preview`` samples, extended by holding its final value."""
    r = np.asarray(r, dtype=float)
    if preview < 0:
        raise ValueError("preview must be >= 0")
    if preview == 0:
        return r.copy()
    p = min(preview, r.size)
    return np.concatenate([r[p:], np.full(p, r[-1])])


def basis_matrix(r, preview=0):
    """``[Delta r, Delta^2 r]`` with zero initial conditions, shape (N, 2).

    With ``preview > 0`` the differences act on :func:`preview_shift` of ``r``.
    """
    rp = preview_shift(r, preview)
    d1 = np.diff(rp, prepend=0.0)
    d2 = np.diff(d1, prepend=0.0)
    return np.column_stack([d1, d2])


def bfilc_update(basis, model_sp, trial, theta, weight=None, cond_max=1e12):
    """Least-squares basis-function ILC step.

    ``theta_{j+1} = theta_j + (M^T W M)^{-1} M^T W e_j`` with ``M = J Psi``.

    Raises
    ------
    DegenerateBasisError
        If ``M`` is rank deficient (e.g. a constant reference).
    """
    Psi = np.asarray(basis, dtype=float)
    J = np.asarray(model_sp, dtype=float)
    if Psi.shape[0] != len(trial) or J.shape[0] != len(trial):
        raise ValueError("basis, model and trial lengths differ")
    M = J @ Psi
    W = _check_weight(weight, J.shape[0])
    MtW = M.T if W is None else M.T @ W
    A = MtW @ M
    colnorm = np.sqrt(np.abs(np.diag(A)))
    if np.any(colnorm == 0) or np.linalg.cond(A / np.outer(colnorm, colnorm)) > cond_max:
        raise DegenerateBasisError("basis-function regressor J*Psi is rank deficient")
    return np.asarray(theta, dtype=float) + np.linalg.solve(A, MtW @ trial.e)

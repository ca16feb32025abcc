"""Regularised particle filter with an MCMC move step for joint state and
tyre-parameter estimation.

Particles carry the augmented vector [U, w_f, w_r, B, C, D, E]. Propagation
is the deterministic reduced model; diversity comes only from the
regularisation jitter applied after resampling and from the accept/reject
move that follows it. Resampling is systematic and is triggered adaptively:
the threshold scales with the current peak-friction estimate, so a slippery
posterior resamples more eagerly than a grippy one.

A separate retrogressive reset guards against mis-convergence after road
changes: parameter columns are redrawn from the prior while the state
columns and their hard-won accuracy are kept.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .estimation_model import N_AUG, X_D, predict_state
from .vehicle import VehicleParams

DEFAULT_SENSOR_VARIANCE = (0.2, 0.5, 0.5)  # GPS speed, front wheel, rear wheel


@dataclass(frozen=True)
class PriorSpec:
    """Uniform boxes for the initial particle population."""

    theta_lo: tuple[float, float, float, float] = (4.0, 1.2601, 0.2, -12.0)
    theta_hi: tuple[float, float, float, float] = (21.0, 1.601, 1.6, 2.0)
    speed_halfwidth: float = 2.0
    wheel_halfwidth: float = 3.5

    def sample_theta(self, n: int, rng: np.random.Generator) -> np.ndarray:
        lo = np.asarray(self.theta_lo)
        hi = np.asarray(self.theta_hi)
        return rng.uniform(lo, hi, size=(n, 4))


@dataclass
class ParticleEnsemble:
    states: np.ndarray                  # (n, 7)
    weights: np.ndarray                 # (n,), normalised
    rng: np.random.Generator
    underflow: bool = False             # last weight update hit all-zero likelihoods
    resampled: bool = False             # last maybe_resample fired
    pre_regularization: np.ndarray | None = field(default=None, repr=False)
    last_accept_rate: float = float("nan")
    last_log_evidence: float = float("nan")  # log mean particle likelihood of the last update

    @property
    def n(self) -> int:
        return self.states.shape[0]


def initialize(y0: np.ndarray, n: int, prior: PriorSpec,
               rng: np.random.Generator) -> ParticleEnsemble:
    """Population drawn around the first measurement y0 = [U, w_f, w_r]."""
    if n < 2:
        raise ValueError("need at least two particles")
    states = np.empty((n, N_AUG))
    states[:, 0] = rng.uniform(y0[0] - prior.speed_halfwidth, y0[0] + prior.speed_halfwidth, n)
    states[:, 1] = rng.uniform(y0[1] - prior.wheel_halfwidth, y0[1] + prior.wheel_halfwidth, n)
    states[:, 2] = rng.uniform(y0[2] - prior.wheel_halfwidth, y0[2] + prior.wheel_halfwidth, n)
    states[:, 3:] = prior.sample_theta(n, rng)
    return ParticleEnsemble(states=states, weights=np.full(n, 1.0 / n), rng=rng)


def gaussian_likelihoods(states: np.ndarray, y: np.ndarray, variance) -> np.ndarray:
    """Per-particle likelihood of y under additive Gaussian sensor noise.
    The normalising constant is dropped; every use is ratio- or sum-normalised."""
    var = np.asarray(variance, dtype=float)
    diff = states[:, :3] - np.asarray(y, dtype=float)
    return np.exp(-0.5 * np.sum(diff * diff / var, axis=1))


def propagate_and_weight(ens: ParticleEnsemble, u: float, y: np.ndarray, dt: float,
                         params: VehicleParams,
                         variance=DEFAULT_SENSOR_VARIANCE) -> ParticleEnsemble:
    """Push every particle through the model under torque u, then fold the new
    measurement into the weights. All-zero likelihoods (possible when the road
    changes under a converged ensemble) reset the weights to uniform and raise
    the underflow flag, which feeds the retrogressive trigger."""
    states = predict_state(ens.states, u, dt, params)
    lik = gaussian_likelihoods(states, y, variance)
    evidence = float(ens.weights @ lik)
    log_ev = math.log(evidence) if evidence > 0.0 else -math.inf
    w = ens.weights * lik
    total = float(w.sum())
    if total <= 0.0 or not np.isfinite(total):
        return replace(ens, states=states, weights=np.full(ens.n, 1.0 / ens.n),
                       underflow=True, resampled=False, last_log_evidence=log_ev)
    return replace(ens, states=states, weights=w / total, underflow=False,
                   resampled=False, last_log_evidence=log_ev)


def effective_sample_size(weights: np.ndarray) -> float:
    return float(1.0 / np.sum(np.square(weights)))


def resampling_gain(ens: ParticleEnsemble) -> float:
    """Adaptive threshold gain K_o = -(3/20) E[D] + 0.295."""
    mean_d = float(np.dot(ens.weights, ens.states[:, X_D]))
    return -(3.0 / 20.0) * mean_d + 0.295


def systematic_resample_indices(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n = len(weights)
    positions = (rng.random() + np.arange(n)) / n
    return _positions_to_indices(weights, positions)


def stratified_resample_indices(weights: np.ndarray, rng: np.random.Generator,
                                n_out: int | None = None) -> np.ndarray:
    n_out = len(weights) if n_out is None else n_out
    positions = (rng.random(n_out) + np.arange(n_out)) / n_out
    return _positions_to_indices(weights, positions)


def _positions_to_indices(weights: np.ndarray, positions: np.ndarray) -> np.ndarray:
    cum = np.cumsum(weights)
    cum[-1] = 1.0  # guard the top edge against rounding
    return np.searchsorted(cum, positions, side="left").clip(max=len(weights) - 1)


def bandwidth(n_particles: int, n_x: int = N_AUG) -> float:
    """Optimal Gaussian-kernel bandwidth h = A n^(-1/(n_x+4)),
    A = (4/(n_x+2))^(1/(n_x+4))."""
    A = (4.0 / (n_x + 2)) ** (1.0 / (n_x + 4))
    return A * n_particles ** (-1.0 / (n_x + 4))


def regularize(ens: ParticleEnsemble, d_floor: float = 0.01,
               jitter_floor: np.ndarray | None = None,
               theta_box: tuple[np.ndarray, np.ndarray] | None = None) -> ParticleEnsemble:
    """Jitter particles with the bandwidth-scaled Cholesky factor of the
    weighted ensemble covariance. Keeps the pre-jitter states for the move
    step. Only the peak-friction column is floored (at d_floor); everything
    else may roam and is policed by the likelihood.

    jitter_floor, when given, is a per-column lower bound on the marginal
    jitter scale of the augmented state. It stops the kernel width from
    contracting to nothing once the ensemble agrees, which would otherwise
    end parameter exploration and slow the chase of fast state swings.

    theta_box, when given, reflects jittered tyre parameters back inside the
    sampling box. Without it the floored jitter lets weakly identified
    parameters random-walk out of the physical range whenever the data
    cannot discriminate, and the curve-shape estimate drifts with them."""
    n = ens.n
    w = ens.weights
    mean = w @ ens.states
    centred = ens.states - mean
    cov = (n / (n - 1)) * (centred.T * w) @ centred / float(w.sum())
    if jitter_floor is not None:
        h = bandwidth(n)
        for j in range(len(jitter_floor)):
            lo = (jitter_floor[j] / h) ** 2
            if cov[j, j] < lo:
                cov[j, j] = lo
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        try:
            chol = np.linalg.cholesky(cov + 1e-10 * np.eye(N_AUG))
        except np.linalg.LinAlgError:
            return replace(ens, pre_regularization=ens.states.copy())
    eps = ens.rng.standard_normal(ens.states.shape)
    jittered = ens.states + bandwidth(n) * eps @ chol.T
    if theta_box is not None:
        lo, hi = theta_box
        th = jittered[:, 3:]
        th = np.where(th < lo, 2.0 * lo - th, th)
        th = np.where(th > hi, 2.0 * hi - th, th)
        jittered[:, 3:] = np.clip(th, lo, hi)
    jittered[:, X_D] = np.maximum(jittered[:, X_D], d_floor)
    return replace(ens, states=jittered, pre_regularization=ens.states.copy())


def mcmc_move(ens: ParticleEnsemble, y: np.ndarray,
              variance=DEFAULT_SENSOR_VARIANCE) -> ParticleEnsemble:
    """Metropolis-Hastings accept/reject of the regularised particles against
    their pre-jitter values, using the current measurement."""
    if ens.pre_regularization is None:
        raise ValueError("mcmc_move requires a regularized ensemble")
    current = ens.pre_regularization
    lik_new = gaussian_likelihoods(ens.states, y, variance)
    lik_old = gaussian_likelihoods(current, y, variance)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(lik_old > 0.0, lik_new / np.maximum(lik_old, 1e-300),
                         np.where(lik_new > 0.0, np.inf, 0.0))
    accept = ens.rng.random(ens.n) < ratio
    states = np.where(accept[:, None], ens.states, current)
    return replace(ens, states=states, pre_regularization=None,
                   last_accept_rate=float(np.mean(accept)))


def maybe_resample(ens: ParticleEnsemble, y: np.ndarray,
                   variance=DEFAULT_SENSOR_VARIANCE,
                   jitter_floor: np.ndarray | None = None,
                   theta_box: tuple[np.ndarray, np.ndarray] | None = None) -> ParticleEnsemble:
    """Adaptive resampling step: when the effective sample size drops to
    K_o n or below, run systematic resampling, regularisation and the MCMC
    move; otherwise pass the ensemble through unchanged."""
    n_eff = effective_sample_size(ens.weights)
    if n_eff > resampling_gain(ens) * ens.n:
        return replace(ens, resampled=False)
    idx = systematic_resample_indices(ens.weights, ens.rng)
    resampled = replace(ens, states=ens.states[idx].copy(),
                        weights=np.full(ens.n, 1.0 / ens.n), resampled=True)
    return mcmc_move(regularize(resampled, jitter_floor=jitter_floor,
                                theta_box=theta_box),
                     y, variance)


def retrogressive_resample(ens: ParticleEnsemble, p_pred: float, p0: float,
                           prior: PriorSpec,
                           force: bool = False) -> tuple[ParticleEnsemble, bool]:
    """Reset the parameter columns to the prior when predicted-force
    uncertainty reaches its initial level (or when forced by a likelihood
    underflow). State columns are preserved exactly; weights go uniform."""
    if not force and not p_pred >= p0:
        return ens, False
    states = ens.states.copy()
    states[:, 3:] = prior.sample_theta(ens.n, ens.rng)
    return replace(ens, states=states, weights=np.full(ens.n, 1.0 / ens.n)), True


def posterior_mean(ens: ParticleEnsemble) -> np.ndarray:
    return ens.weights @ ens.states

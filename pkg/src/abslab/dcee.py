"""Dual-control torque selection: explore the tyre estimate while exploiting it.

Each control step scores a small set of torque increments. A candidate's cost
is evaluated on the particle ensemble pushed one step ahead:

    J(u) = |mean(F - F*)| + Var(F - F*)

with F the predicted front-axle braking force of each particle and
F* = -D F_z the force the particle believes the surface can deliver at its
peak. Both terms shrink only when the wheels operate near the estimated peak
AND the ensemble agrees on where that peak is, so probing that sharpens the
estimate is rewarded alongside raw braking.

The ensemble is downsampled to a fixed number of predicted observations by
stratified resampling on the posterior weights; the retained samples are
then reweighted with a Gaussian observation model on force (sigma_f) centred
on their own mean. Candidate evaluation is pure: it never touches the
ensemble or its generator, and all candidates share one stratified draw so
they are compared on identical sample paths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimation_model import X_D, predict_state, vertical_loads
from .estimator import ParticleEnsemble, _positions_to_indices
from .tyre import friction_components
from .vehicle import VehicleParams


@dataclass(frozen=True)
class DceeConfig:
    increments: tuple[float, ...] = (-400.0, -200.0, -50.0, 0.0, 50.0, 200.0, 400.0)
    torque_min: float = -4000.0   # per front wheel, N m
    torque_max: float = 0.0
    n_pred: int = 40              # predicted observations kept per candidate
    sigma_f: float = 250.0        # force observation variance, N^2
    hold_speed: float = 1.5       # m/s; below this the last torque is held
    kappa_floor: float = -0.25    # candidates predicted below this slip are barred


@dataclass(frozen=True)
class ActionDecision:
    torque: float                 # chosen per-wheel front torque
    increment: float              # chosen change versus the previous torque
    cost: float                   # J at the chosen candidate
    p_pred: float                 # predicted-force error variance at the choice
    candidate_torques: np.ndarray
    candidate_costs: np.ndarray
    candidate_p: np.ndarray


def force_samples(ens: ParticleEnsemble, u_cand, fz_front: float, dt: float,
                  params: VehicleParams) -> tuple[np.ndarray, np.ndarray, float]:
    """Per-particle braking force F, believed peak force F* (both signed,
    braking negative) and the predicted posterior-mean slip under candidate
    torque u_cand.

    Each particle is pushed one step ahead and its tyre curve is read at its
    own predicted slip, so a particle's error F - F* vanishes exactly when
    its wheel state rides the peak of its own curve. Particles whose
    predicted forward speed is not positive keep their current-state force.
    """
    pred = predict_state(ens.states, u_cand, dt, params)
    dead = pred[:, 0] <= 0.0
    if np.any(dead):
        pred = np.where(dead[:, None], ens.states, pred)
    denom = np.maximum(pred[:, 0], 1e-9)
    kappa = (pred[:, 1] * params.R - denom) / denom
    mu = friction_components(kappa, pred[:, 3], pred[:, 4],
                             pred[:, 5], pred[:, 6])
    f = mu * fz_front
    f_star = -pred[:, X_D] * fz_front
    kappa_mean = float(ens.weights @ kappa)
    return f, f_star, kappa_mean


def cost_terms(f: np.ndarray, f_star: np.ndarray, weights: np.ndarray) -> tuple[float, float]:
    """(J, P) for weighted force samples: J = |mean error| + P.

    P is the error variance of the predicted peak-force tracking estimate,
    i.e. the population variance of the error scaled by the weight mass
    sum(w^2) (1/N for uniform weights). Using the estimator variance keeps
    the exploration term on a scale the tracking term can trade against;
    the raw population variance grows a barrier around slip zero that a
    one-step search can never climb, which strands the loop unbraked."""
    e = f - f_star
    ebar = float(weights @ e)
    p = float(weights @ np.square(e - ebar)) * float(weights @ weights)
    return abs(ebar) + p, p


def _observation_weights(f: np.ndarray, sigma_f: float) -> np.ndarray:
    # Gaussian on force centred on the sample consensus
    var = sigma_f + float(np.var(f))
    w = np.exp(-0.5 * np.square(f - f.mean()) / var)
    total = w.sum()
    if total <= 0.0:
        return np.full(len(f), 1.0 / len(f))
    return w / total


def select_action(ens: ParticleEnsemble, u_prev: float, accel_prev: float,
                  dt: float, params: VehicleParams, cfg: DceeConfig,
                  rng: np.random.Generator) -> ActionDecision:
    """Score every torque increment and return the argmin-J candidate.

    Candidates whose predicted posterior-mean slip drops below the slip
    envelope are inadmissible; if every candidate violates it the strongest
    release is forced, which rules out a standing locked wheel. Ties break
    to the smallest |increment|, then the most negative one."""
    taus = np.asarray(cfg.increments, dtype=float)
    u_cands = np.clip(u_prev + taus, cfg.torque_min, cfg.torque_max)
    k = len(taus)

    fz_front, _ = vertical_loads(accel_prev, params)
    # one stratified draw per decision, shared by all candidates; the fresh
    # offsets each step keep the action selection lightly dithered, which
    # sustains the excitation the estimator needs
    positions = (np.arange(cfg.n_pred) + rng.random(cfg.n_pred)) / cfg.n_pred
    idx = _positions_to_indices(ens.weights, positions)

    costs = np.empty(k)
    p_values = np.empty(k)
    admissible = np.empty(k, dtype=bool)
    for i in range(k):
        f, f_star, kappa_mean = force_samples(ens, u_cands[i], fz_front, dt, params)
        f40 = f[idx]
        fstar40 = f_star[idx]
        w40 = _observation_weights(f40, cfg.sigma_f)
        costs[i], p_values[i] = cost_terms(f40, fstar40, w40)
        admissible[i] = kappa_mean >= cfg.kappa_floor

    if np.any(admissible):
        pool = [i for i in range(k) if admissible[i]]
    else:
        pool = [int(np.argmax(taus))]
    best = min(pool, key=lambda i: (costs[i], abs(taus[i]), taus[i]))
    return ActionDecision(
        torque=float(u_cands[best]),
        increment=float(taus[best]),
        cost=float(costs[best]),
        p_pred=float(p_values[best]),
        candidate_torques=u_cands,
        candidate_costs=costs,
        candidate_p=p_values,
    )

"""Stochastic realization machinery: state second-moment fixed points, the
associated deterministic realization of the output covariances, the innovation
gain recursion, both minimization algorithms, and the minimal-innovation checks.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .algebra import ms_stability_matrix, spectral_radius
from .deterministic import (
    KalmanResult,
    MinimalityReport,
    is_minimal_dlpv,
    kalman_minimize,
    sub_markov,
    sub_markov_table,
)
from .errors import ConvergenceError, NoiseDegeneracyError
from .models import AsLpvSsa, DLpvSsa, SchedulingSpec

FIXED_POINT_TOL = 1e-10
FIXED_POINT_MAX_ITER = 100000


@dataclass
class MomentSolution:
    """Fixed point of the state second-moment recursion."""

    P: tuple
    iterations: int
    residual: float


@dataclass
class InnovationSolution:
    """Converged innovation gain/covariance data."""

    Khat: tuple
    Qhat: tuple
    Phat: tuple
    iterations: int
    residual: float


def _check_pair(S: AsLpvSsa, spec: SchedulingSpec):
    if spec.pdim != S.pdim:
        raise ValueError(
            f"scheduling pdim {spec.pdim} does not match system pdim {S.pdim}"
        )


def _moment_step(S: AsLpvSsa, p, P):
    G = np.zeros((S.n, S.n))
    for A, K, Q, Pj in zip(S.A, S.K, S.Q, P):
        G += A @ Pj @ A.T + K @ Q @ K.T
    return [ps * G for ps in p]


def state_second_moments(
    S: AsLpvSsa,
    spec: SchedulingSpec,
    tol: float = FIXED_POINT_TOL,
    max_iter: int = FIXED_POINT_MAX_ITER,
    method: str = "iterate",
) -> MomentSolution:
    """Solve P_s = p_s * sum_j (A_j P_j A_j^T + K_j Q_j K_j^T).

    method "iterate" runs the recursion from P = 0; "solve" assembles the
    stacked linear system in vec(P_s) and solves it directly (same fixed
    point, used as an independent oracle).
    """
    _check_pair(S, spec)
    if tol <= 0:
        raise ValueError("tol must be positive")
    radius = spectral_radius(ms_stability_matrix(S.A, spec.p))
    if radius >= 1.0:
        raise ValueError(f"system is not mean-square stable (radius {radius:.6f})")
    n = S.n
    p = spec.p
    if method == "solve":
        n2 = n * n
        pdim = S.pdim
        M = np.zeros((pdim * n2, pdim * n2))
        c = np.zeros(n2)
        for j, (A, K, Q) in enumerate(zip(S.A, S.K, S.Q)):
            kron = np.kron(A, A)
            for i in range(pdim):
                M[i * n2 : (i + 1) * n2, j * n2 : (j + 1) * n2] = p[i] * kron
            c += (K @ Q @ K.T).ravel()
        b = np.concatenate([p[i] * c for i in range(pdim)])
        x = np.linalg.solve(np.eye(pdim * n2) - M, b)
        P = [x[i * n2 : (i + 1) * n2].reshape(n, n) for i in range(pdim)]
        P = [(Pi + Pi.T) / 2.0 for Pi in P]
        step = _moment_step(S, p, P)
        residual = max(
            float(np.linalg.norm(a - b_, "fro")) for a, b_ in zip(step, P)
        ) if n else 0.0
        return MomentSolution(P=tuple(P), iterations=0, residual=residual)
    if method != "iterate":
        raise ValueError(f"unknown method {method!r}")
    P = [np.zeros((n, n)) for _ in range(S.pdim)]
    residual = 0.0
    for it in range(1, max_iter + 1):
        P_next = _moment_step(S, p, P)
        residual = max(
            float(np.linalg.norm(a - b_, "fro")) for a, b_ in zip(P_next, P)
        ) if n else 0.0
        P = P_next
        if residual < tol:
            P = [(Pi + Pi.T) / 2.0 for Pi in P]
            return MomentSolution(P=tuple(P), iterations=it, residual=residual)
    raise ConvergenceError(
        f"moment recursion did not reach tol {tol} in {max_iter} iterations",
        residual=residual,
        iterations=max_iter,
    )


@dataclass
class AssociatedDlpv:
    """Deterministic realization of the output covariance function, plus the
    normalized same-time output second moments Ty and the moment solution."""

    system: DLpvSsa
    Ty: tuple
    moments: MomentSolution


def associated_dlpv(
    S: AsLpvSsa,
    spec: SchedulingSpec,
    tol: float = FIXED_POINT_TOL,
    max_iter: int = FIXED_POINT_MAX_ITER,
    method: str = "iterate",
) -> AssociatedDlpv:
    """({sqrt(p_s) A_s, B_s}, C, I) with B_s = (A_s P_s C^T + K_s Q_s F^T)/sqrt(p_s)."""
    moments = state_second_moments(S, spec, tol=tol, max_iter=max_iter, method=method)
    p = spec.p
    A_hat = tuple(np.sqrt(ps) * A for ps, A in zip(p, S.A))
    B_hat = tuple(
        (A @ P @ S.C.T + K @ Q @ S.F.T) / np.sqrt(ps)
        for ps, A, P, K, Q in zip(p, S.A, moments.P, S.K, S.Q)
    )
    Ty = tuple(
        (S.C @ P @ S.C.T + S.F @ Q @ S.F.T) / ps
        for ps, P, Q in zip(p, moments.P, S.Q)
    )
    system = DLpvSsa(A=A_hat, B=B_hat, C=S.C.copy(), D=np.eye(S.ny))
    return AssociatedDlpv(system=system, Ty=Ty, moments=moments)


def psi_y_model(S: AsLpvSsa, spec: SchedulingSpec, w) -> np.ndarray:
    """Model-implied covariance Psi_y(w); identity for the empty word."""
    assoc = associated_dlpv(S, spec)
    return sub_markov(assoc.system, tuple(w))


def psi_y_model_table(S: AsLpvSsa, spec: SchedulingSpec, max_len: int) -> dict:
    """Psi_y(w) for every |w| <= max_len, computing the realization once."""
    assoc = associated_dlpv(S, spec)
    return sub_markov_table(assoc.system, max_len)


def associated_aslpv(
    D: DLpvSsa,
    Ty: Sequence[np.ndarray],
    spec: SchedulingSpec,
    tol: float = FIXED_POINT_TOL,
    max_iter: int = FIXED_POINT_MAX_ITER,
):
    """Innovation-form stochastic realization from a minimal covariance
    realization, via the coupled gain/covariance recursion.

    Iterates, from Phat = 0:
        Qhat_s = p_s Ty_s - C Phat_s C^T
        Khat_s = (B_s sqrt(p_s) - A_s Phat_s C^T / sqrt(p_s)) Qhat_s^-1
        Phat'_s = p_s sum_j (A_j Phat_j A_j^T / p_j + Khat_j Qhat_j Khat_j^T)
    and returns (AsLpvSsa({A_s/sqrt(p_s), Khat_s}, C, I, Qhat), solution).

    Minimality of D is a caller contract. Raises NoiseDegeneracyError when a
    Qhat_s loses positive definiteness and ConvergenceError on stall.
    """
    if D.pdim != spec.pdim:
        raise ValueError("scheduling pdim does not match system pdim")
    if D.nu != D.ny or not np.allclose(D.D, np.eye(D.ny), atol=1e-9, rtol=0.0):
        raise ValueError("expected a covariance realization with D = I")
    if len(Ty) != D.pdim:
        raise ValueError("need one Ty block per scheduling coordinate")
    p = spec.p
    n, ny = D.n, D.ny
    C = D.C
    sqp = [np.sqrt(ps) for ps in p]
    Phat = [np.zeros((n, n)) for _ in range(D.pdim)]
    history = []
    residual = float("inf")

    def gains(Phat, iteration):
        Qhat, Khat = [], []
        for i in range(D.pdim):
            Q = p[i] * Ty[i] - C @ Phat[i] @ C.T
            Q = (Q + Q.T) / 2.0
            lam = float(np.min(np.linalg.eigvalsh(Q))) if Q.size else 0.0
            floor = 1e-12 * max(float(np.trace(Q)), 0.0)
            if lam <= floor:
                raise NoiseDegeneracyError(
                    f"innovation covariance for sigma={i + 1} lost positive "
                    f"definiteness at iteration {iteration} (min eig {lam:.3e})",
                    sigma=i + 1,
                    iteration=iteration,
                    min_eigenvalue=lam,
                )
            K = (D.B[i] * sqp[i] - (D.A[i] @ Phat[i] @ C.T) / sqp[i]) @ np.linalg.inv(Q)
            Qhat.append(Q)
            Khat.append(K)
        return Qhat, Khat

    for it in range(1, max_iter + 1):
        Qhat, Khat = gains(Phat, it)
        G = np.zeros((n, n))
        for j in range(D.pdim):
            G += D.A[j] @ Phat[j] @ D.A[j].T / p[j] + Khat[j] @ Qhat[j] @ Khat[j].T
        P_next = [p[i] * G for i in range(D.pdim)]
        residual = max(
            float(np.linalg.norm(a - b, "fro")) for a, b in zip(P_next, Phat)
        ) if n else 0.0
        Phat = P_next
        history.append(residual)
        if residual < tol:
            break
    else:
        raise ConvergenceError(
            f"innovation recursion did not reach tol {tol} in {max_iter} iterations",
            residual=residual,
            iterations=max_iter,
            history=history[-10:],
        )
    Qhat, Khat = gains(Phat, it + 1)
    system = AsLpvSsa(
        A=tuple(A / sq for A, sq in zip(D.A, sqp)),
        K=tuple(Khat),
        C=C.copy(),
        F=np.eye(ny),
        Q=tuple(Qhat),
    )
    solution = InnovationSolution(
        Khat=tuple(Khat),
        Qhat=tuple(Qhat),
        Phat=tuple(Phat),
        iterations=it,
        residual=residual,
    )
    return system, solution


@dataclass
class Algorithm1Result:
    system: AsLpvSsa
    n_min: int
    moments: MomentSolution
    covariance_realization: DLpvSsa
    kalman: KalmanResult
    innovation: InnovationSolution


def minimize_algorithm1(
    S: AsLpvSsa,
    spec: SchedulingSpec,
    tol: float = FIXED_POINT_TOL,
    max_iter: int = FIXED_POINT_MAX_ITER,
) -> Algorithm1Result:
    """Covariance-realization minimization: build the associated deterministic
    realization, Kalman-minimize it, then recover an innovation-form
    stochastic model via the gain recursion.

    Minimal-realization guarantees hold when the input realizes its output in
    innovation form; the construction itself applies to any mean-square-stable
    input with valid noise moments.
    """
    assoc = associated_dlpv(S, spec, tol=tol, max_iter=max_iter)
    km = kalman_minimize(assoc.system)
    system, innovation = associated_aslpv(
        km.system, assoc.Ty, spec, tol=tol, max_iter=max_iter
    )
    return Algorithm1Result(
        system=system,
        n_min=km.n_min,
        moments=assoc.moments,
        covariance_realization=assoc.system,
        kalman=km,
        innovation=innovation,
    )


def innovation_triple(S: AsLpvSsa) -> DLpvSsa:
    """The deterministic carrier ({A_s, K_s}, C, I) of an F = I model."""
    if not S.has_identity_f():
        raise ValueError("innovation triple requires F = I (square identity)")
    return DLpvSsa(
        A=tuple(A.copy() for A in S.A),
        B=tuple(K.copy() for K in S.K),
        C=S.C.copy(),
        D=np.eye(S.ny),
    )


@dataclass
class InvertabilityReport:
    stably_invertable: bool
    radius: float

    def to_dict(self) -> dict:
        return {
            "stably_invertable": self.stably_invertable,
            "radius": self.radius,
        }


def is_stably_invertable(S: AsLpvSsa, spec: SchedulingSpec) -> InvertabilityReport:
    """Radius of sum_s p_s (A_s - K_s C) kron (A_s - K_s C); flag iff < 1."""
    _check_pair(S, spec)
    if not S.has_identity_f():
        raise ValueError("stable invertability is defined for F = I models")
    closed = [A - K @ S.C for A, K in zip(S.A, S.K)]
    radius = spectral_radius(ms_stability_matrix(closed, spec.p))
    return InvertabilityReport(stably_invertable=bool(radius < 1.0), radius=radius)


@dataclass
class InnovationCheck:
    minimality: MinimalityReport
    invertability: InvertabilityReport

    @property
    def innovation_form_sufficient(self) -> bool:
        # One-directional: stable invertability is sufficient for innovation
        # form, never claimed necessary.
        return self.invertability.stably_invertable

    @property
    def minimal_innovation(self) -> bool:
        return self.minimality.minimal and self.invertability.stably_invertable

    def to_dict(self) -> dict:
        return {
            "dlpv_minimal": self.minimality.minimal,
            "reach_rank": self.minimality.reach_rank,
            "obs_rank": self.minimality.obs_rank,
            "stably_invertable": self.invertability.stably_invertable,
            "radius": self.invertability.radius,
            "innovation_form_sufficient": self.innovation_form_sufficient,
            "minimal_innovation": self.minimal_innovation,
        }


def check_minimal_innovation(S: AsLpvSsa, spec: SchedulingSpec) -> InnovationCheck:
    """Minimality of ({A_s, K_s}, C, I) plus stable invertability."""
    return InnovationCheck(
        minimality=is_minimal_dlpv(innovation_triple(S)),
        invertability=is_stably_invertable(S, spec),
    )


@dataclass
class Algorithm2Result:
    system: AsLpvSsa
    n_min: int
    kalman: KalmanResult
    noise: str  # "inherited" or "recomputed"


def minimize_algorithm2(
    S: AsLpvSsa,
    spec: SchedulingSpec,
    recompute_noise: bool = False,
) -> Algorithm2Result:
    """Minimization for stably invertable F = I models: Kalman-minimize the
    carrier ({A_s, K_s}, C, I) directly, with no fixed-point iterations.

    The output noise moments are inherited from the input by default (the
    innovation process is unchanged); recompute_noise=True reruns the full
    covariance pass to recompute them independently.
    """
    report = is_stably_invertable(S, spec)
    if not report.stably_invertable:
        raise ValueError(
            f"input is not stably invertable (radius {report.radius:.6f})"
        )
    km = kalman_minimize(innovation_triple(S))
    if recompute_noise:
        Q = minimize_algorithm1(S, spec).system.Q
        noise = "recomputed"
    else:
        Q = tuple(Qs.copy() for Qs in S.Q)
        noise = "inherited"
    system = AsLpvSsa(
        A=km.system.A,
        K=km.system.B,
        C=km.system.C,
        F=np.eye(S.ny),
        Q=Q,
    )
    return Algorithm2Result(system=system, n_min=km.n_min, kalman=km, noise=noise)

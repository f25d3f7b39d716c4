"""Deterministic LPV realization theory: sub-Markov functions, reachability,
observability, Kalman minimization, isomorphism recovery, and the gain-feedback
transform pair used by the stochastic layer."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .algebra import (
    RANK_TOL,
    check_finite,
    column_space_basis,
    invariant_closure,
    word_product,
    words_up_to,
)
from .models import DLpvSsa


def sub_markov(D: DLpvSsa, w) -> np.ndarray:
    """M(eps) = D; M(s1 s2..sk) = C A_{s2..sk} B_{s1}."""
    if len(w) == 0:
        return D.D.copy()
    first = w[0]
    if not 1 <= first <= D.pdim:
        raise ValueError(f"letter {first} outside [1, {D.pdim}]")
    return D.C @ word_product(D.A, w[1:]) @ D.B[first - 1]


def sub_markov_levels(D: DLpvSsa, max_len: int) -> list:
    """Stacked sub-Markov values by word length.

    levels[k] has shape (pdim^k, ny, nu) holding M(w) for |w| = k in
    lexicographic word order (levels[0] is M(eps) = D).
    """
    if max_len < 0:
        raise ValueError("max_len must be >= 0")
    pdim = D.pdim
    As = np.stack(D.A) if D.n else np.zeros((pdim, 0, 0))
    levels = [D.D[None, :, :].copy()]
    # CA holds C A_s for all suffixes s of the current length, lex order.
    CA = D.C[None, :, :]
    for _ in range(1, max_len + 1):
        block = [CA @ D.B[i] for i in range(pdim)]
        levels.append(np.concatenate(block, axis=0))
        CA = np.concatenate([CA @ As[i] for i in range(pdim)], axis=0)
    return levels


def sub_markov_table(D: DLpvSsa, max_len: int) -> dict:
    """Word -> M(w) for all |w| <= max_len (lexicographic enumeration)."""
    levels = sub_markov_levels(D, max_len)
    out = {}
    idx = [0] * (max_len + 1)
    for w in words_up_to(D.pdim, max_len):
        k = len(w)
        out[w] = levels[k][idx[k]]
        idx[k] += 1
    return out


def markov_distance(D1: DLpvSsa, D2: DLpvSsa, max_len: int) -> float:
    """Max absolute entrywise difference of the two sub-Markov functions."""
    if D1.ny != D2.ny or D1.nu != D2.nu or D1.pdim != D2.pdim:
        raise ValueError("systems have incompatible output/input/scheduling dims")
    l1 = sub_markov_levels(D1, max_len)
    l2 = sub_markov_levels(D2, max_len)
    return max(
        float(np.max(np.abs(a - b))) if a.size else 0.0 for a, b in zip(l1, l2)
    )


def _word_products(D: DLpvSsa, depth: int) -> dict:
    """A_w for all |w| <= depth, memoized by one-letter extension."""
    prods = {(): np.eye(D.n)}
    for w in words_up_to(D.pdim, depth):
        if w and w not in prods:
            prods[w] = D.A[w[-1] - 1] @ prods[w[:-1]]
    return prods


def reachability_matrix(D: DLpvSsa, depth: Optional[int] = None) -> np.ndarray:
    """[A_w B_1 | ... | A_w B_pdim] over |w| <= depth, lexicographic w."""
    if depth is None:
        depth = max(D.n - 1, 0)
    if depth < 0:
        raise ValueError("depth must be >= 0")
    Bcat = np.hstack(D.B)
    prods = _word_products(D, depth)
    return np.hstack([prods[w] @ Bcat for w in words_up_to(D.pdim, depth)])


def observability_matrix(D: DLpvSsa, depth: Optional[int] = None) -> np.ndarray:
    """Stacked C A_w over |w| <= depth, lexicographic w."""
    if depth is None:
        depth = max(D.n - 1, 0)
    if depth < 0:
        raise ValueError("depth must be >= 0")
    prods = _word_products(D, depth)
    return np.vstack([D.C @ prods[w] for w in words_up_to(D.pdim, depth)])


def _rank(M: np.ndarray, tol: float = RANK_TOL) -> int:
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0] * max(M.shape)))


@dataclass
class MinimalityReport:
    minimal: bool
    reach_rank: int
    obs_rank: int

    def to_dict(self) -> dict:
        return {
            "minimal": self.minimal,
            "reach_rank": self.reach_rank,
            "obs_rank": self.obs_rank,
        }


def is_minimal_dlpv(D: DLpvSsa) -> MinimalityReport:
    """Minimal iff span-reachable and observable (ranks n at depth n-1)."""
    reach_rank = _rank(reachability_matrix(D))
    obs_rank = _rank(observability_matrix(D))
    return MinimalityReport(
        minimal=bool(reach_rank == D.n and obs_rank == D.n),
        reach_rank=reach_rank,
        obs_rank=obs_rank,
    )


@dataclass
class KalmanResult:
    system: DLpvSsa
    T: np.ndarray          # projection onto minimal coordinates, n_min x n
    injection: np.ndarray  # orthonormal injection back, n x n_min
    n_min: int


def kalman_minimize(D: DLpvSsa) -> KalmanResult:
    """Minimal realization by restriction to the reachable subspace followed by
    the quotient over its unobservable part.

    The minimal system has the same sub-Markov function; n_min = 0 is allowed
    and yields the empty-state system (M(w) = 0 for w != eps).
    """
    n = D.n
    steps = max(n - 1, 0)
    R = invariant_closure(D.A, np.hstack(D.B), steps)
    W = invariant_closure([A.T for A in D.A], D.C.T, steps)
    if R.shape[1] == 0 or W.shape[1] == 0:
        X2 = np.zeros((n, 0))
    else:
        # X1 spans the unobservable part of R: R-vectors orthogonal to W.
        M = W.T @ R
        s = np.linalg.svd(M, compute_uv=False)
        rank = int(np.sum(s > RANK_TOL * s[0] * max(M.shape))) if s[0] > 0 else 0
        _, _, Vt = np.linalg.svd(M)
        null = Vt[rank:].T
        X1 = column_space_basis(R @ null) if null.size else np.zeros((n, 0))
        X2 = column_space_basis(R - X1 @ (X1.T @ R))
    D_min = DLpvSsa(
        A=tuple(X2.T @ A @ X2 for A in D.A),
        B=tuple(X2.T @ B for B in D.B),
        C=D.C @ X2,
        D=D.D.copy(),
    )
    return KalmanResult(system=D_min, T=X2.T, injection=X2, n_min=X2.shape[1])


def find_isomorphism(
    D1: DLpvSsa, D2: DLpvSsa, tol: float = 1e-6
) -> Optional[np.ndarray]:
    """State-space basis change T with T A1 T^-1 = A2, T B1 = B2, C1 T^-1 = C2.

    Both systems must be minimal with equal dimensions. Returns None when the
    sub-Markov functions differ beyond tol over |w| <= 2n, or when the
    least-squares candidate fails the verification at tol.
    """
    if (D1.n, D1.ny, D1.nu, D1.pdim) != (D2.n, D2.ny, D2.nu, D2.pdim):
        raise ValueError("isomorphism needs equal state/output/input/scheduling dims")
    if not is_minimal_dlpv(D1).minimal or not is_minimal_dlpv(D2).minimal:
        raise ValueError("isomorphism search requires minimal systems")
    n = D1.n
    if n == 0:
        return np.zeros((0, 0)) if markov_distance(D1, D2, 0) <= tol else None
    if markov_distance(D1, D2, 2 * n) > tol:
        return None
    R1 = reachability_matrix(D1)
    R2 = reachability_matrix(D2)
    T = np.linalg.lstsq(R1.T, R2.T, rcond=None)[0].T
    T = check_finite(T, "T")
    if np.linalg.cond(T) > 1e12:
        return None
    Ti = np.linalg.inv(T)
    errs = [float(np.max(np.abs(D1.C @ Ti - D2.C)))]
    for A1, B1, A2, B2 in zip(D1.A, D1.B, D2.A, D2.B):
        errs.append(float(np.max(np.abs(T @ A1 @ Ti - A2))))
        errs.append(float(np.max(np.abs(T @ B1 - B2))))
    if max(errs) > tol:
        return None
    return T


def transform_F(D: DLpvSsa) -> DLpvSsa:
    """({A_s - B_s C, B_s}, C, I) for a system with D = I (gain feedback map)."""
    if D.nu != D.ny or not np.allclose(D.D, np.eye(D.ny), atol=1e-12, rtol=0.0):
        raise ValueError("transform_F requires D = I (square, identity)")
    return DLpvSsa(
        A=tuple(A - B @ D.C for A, B in zip(D.A, D.B)),
        B=tuple(B.copy() for B in D.B),
        C=D.C.copy(),
        D=np.eye(D.ny),
    )


def transform_D(D: DLpvSsa) -> DLpvSsa:
    """Output sign flip: ({A_s, B_s}, -C, D)."""
    return DLpvSsa(
        A=tuple(A.copy() for A in D.A),
        B=tuple(B.copy() for B in D.B),
        C=-D.C,
        D=D.D.copy(),
    )

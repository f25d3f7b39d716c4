"""Word combinatorics and small dense-matrix kernels.

Words over the alphabet {1, ..., pdim} are plain tuples of 1-based ints; the
empty tuple is the empty word. Matrix products over words accumulate right to
left: for w = s1 s2 ... sk, word_product gives A_w = A_sk @ ... @ A_s1.
"""
from __future__ import annotations

import itertools
from typing import Iterable, Sequence

import numpy as np

# Relative rank tolerance: singular values above RANK_TOL * s_max * max(shape)
# count toward the rank.
RANK_TOL = 1e-9

Word = tuple


def check_finite(M: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Return M as a float array, rejecting NaN/Inf entries."""
    M = np.asarray(M, dtype=float)
    if M.size and not np.isfinite(M).all():
        raise ValueError(f"{name} contains NaN or Inf entries")
    return M


def parse_word(text: str, pdim: int | None = None) -> Word:
    """Parse a word from its serialized form.

    Letters are 1-based and joined as digits ("12" -> (1, 2)); a comma form
    "1,2" is accepted for alphabets past 9. The empty string is the empty word.
    """
    text = text.strip()
    if not text:
        return ()
    parts = text.split(",") if "," in text else list(text)
    try:
        letters = tuple(int(c) for c in parts)
    except ValueError as exc:
        raise ValueError(f"cannot parse word {text!r}") from exc
    for s in letters:
        if s < 1 or (pdim is not None and s > pdim):
            raise ValueError(f"letter {s} outside [1, {pdim}] in word {text!r}")
    return letters


def format_word(w: Word) -> str:
    if any(s > 9 for s in w):
        return ",".join(str(s) for s in w)
    return "".join(str(s) for s in w)


def words_up_to(pdim: int, max_len: int) -> list[Word]:
    """All words of length <= max_len in lexicographic (length, letters) order."""
    if pdim < 1:
        raise ValueError("pdim must be >= 1")
    out: list[Word] = []
    for k in range(max_len + 1):
        out.extend(itertools.product(range(1, pdim + 1), repeat=k))
    return out


def word_product(A_family: Sequence[np.ndarray], w: Iterable[int]) -> np.ndarray:
    """A_w = A_sk @ ... @ A_s1 for w = s1 s2 ... sk; identity for the empty word."""
    n = A_family[0].shape[0]
    M = np.eye(n)
    for s in w:
        if not 1 <= s <= len(A_family):
            raise ValueError(f"letter {s} outside [1, {len(A_family)}]")
        M = A_family[s - 1] @ M
    return M


def scheduling_weight(p: Sequence[float], w: Iterable[int]) -> float:
    """p_w = product of p_s over the letters of w (1.0 for the empty word)."""
    out = 1.0
    for s in w:
        out *= p[s - 1]
    return out


def kron(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    A = check_finite(A, "A")
    B = check_finite(B, "B")
    return np.kron(A, B)


def ms_stability_matrix(A_family: Sequence[np.ndarray], p: Sequence[float]) -> np.ndarray:
    """Sum of p_s * (A_s kron A_s); mean-square stability means radius < 1."""
    if len(A_family) != len(p):
        raise ValueError("A family and p lengths differ")
    n = A_family[0].shape[0]
    out = np.zeros((n * n, n * n))
    for ps, A in zip(p, A_family):
        A = check_finite(A, "A_sigma")
        if A.shape != (n, n):
            raise ValueError("A family matrices must be square and same size")
        if ps <= 0:
            raise ValueError("p entries must be positive")
        out += ps * np.kron(A, A)
    return out


def spectral_radius(M: np.ndarray) -> float:
    M = check_finite(M, "M")
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("spectral radius needs a square matrix")
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def column_space_basis(M: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the numerical column space of M.

    Rank counts singular values above tol * s_max * max(M.shape).
    """
    if tol < 0:
        raise ValueError("tol must be >= 0")
    M = check_finite(M, "M")
    if M.ndim != 2:
        M = np.atleast_2d(M)
    if M.size == 0:
        return np.zeros((M.shape[0], 0))
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((M.shape[0], 0))
    r = int(np.sum(s > tol * s[0] * max(M.shape)))
    return U[:, :r]


def invariant_closure(
    A_family: Sequence[np.ndarray],
    V0: np.ndarray,
    steps: int,
    tol: float = RANK_TOL,
) -> np.ndarray:
    """Orthonormal basis of span{A_w v : |w| <= steps, v column of V0}.

    With steps >= n-1 this is the smallest subspace containing Im V0 that is
    invariant under every A_s.
    """
    V0 = check_finite(V0, "V0")
    if V0.ndim != 2:
        V0 = np.atleast_2d(V0)
    n = A_family[0].shape[0]
    if V0.shape[0] != n:
        raise ValueError(f"V0 has {V0.shape[0]} rows, expected {n}")
    if steps < 0:
        raise ValueError("steps must be >= 0")
    B = column_space_basis(V0, tol)
    for _ in range(steps):
        if B.shape[1] == 0 or B.shape[1] == n:
            break
        images = [B] + [A @ B for A in A_family]
        B_next = column_space_basis(np.hstack(images), tol)
        if B_next.shape[1] == B.shape[1]:
            B = B_next
            break
        B = B_next
    return B


def subspaces_equal(B1: np.ndarray, B2: np.ndarray, tol: float = 1e-8) -> bool:
    """Mutual orthogonal-projection test for equality of column spans."""
    if B1.shape[1] != B2.shape[1]:
        return False
    if B1.shape[1] == 0:
        return True
    r1 = np.linalg.norm(B1 - B2 @ (B2.T @ B1))
    r2 = np.linalg.norm(B2 - B1 @ (B1.T @ B2))
    return bool(max(r1, r2) < tol)

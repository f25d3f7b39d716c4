"""System and scheduling data types, structural validation, basis changes, JSON I/O."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .algebra import check_finite, ms_stability_matrix, spectral_radius

MODEL_SCHEMA_VERSION = 1

FAMILY_WHITE_UNIFORM = "white_uniform"
FAMILY_DISCRETE_IID = "discrete_iid"
FAMILY_CONSTANT_PLUS_WHITE = "constant_plus_white"
_FAMILIES = (FAMILY_WHITE_UNIFORM, FAMILY_DISCRETE_IID, FAMILY_CONSTANT_PLUS_WHITE)


@dataclass(frozen=True)
class SchedulingSpec:
    """Scheduling process description: alphabet size, second-moment constants,
    and (optionally) a generator family for sampling.

    p holds the constants p_sigma = E[mu_sigma(t)^2]; a spec built from moments
    alone (family None) supports every algebraic operation but cannot be
    sampled.
    """

    pdim: int
    p: tuple
    family: Optional[str] = None
    alpha: Optional[tuple] = None
    half_widths: Optional[tuple] = None
    probabilities: Optional[tuple] = None

    def __post_init__(self):
        if self.pdim < 1:
            raise ValueError("pdim must be >= 1")
        p = tuple(float(v) for v in self.p)
        object.__setattr__(self, "p", p)
        if len(p) != self.pdim:
            raise ValueError(f"p has {len(p)} entries, expected pdim={self.pdim}")
        if any(not np.isfinite(v) or v <= 0 for v in p):
            raise ValueError("p entries must be positive finite reals")
        if self.family is not None and self.family not in _FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.alpha is not None:
            alpha = tuple(float(v) for v in self.alpha)
            object.__setattr__(self, "alpha", alpha)
            if len(alpha) != self.pdim:
                raise ValueError("alpha length must equal pdim")
        self._check_family()

    def _check_family(self):
        if self.family == FAMILY_WHITE_UNIFORM:
            if self.half_widths is None or len(self.half_widths) != self.pdim:
                raise ValueError("white_uniform needs one half-width per coordinate")
            hw = tuple(float(a) for a in self.half_widths)
            object.__setattr__(self, "half_widths", hw)
            for a, ps in zip(hw, self.p):
                if a <= 0:
                    raise ValueError("half-widths must be positive")
                if abs(ps - a * a / 3.0) > 1e-9 * max(1.0, ps):
                    raise ValueError("p must equal the U(-a,a) variance a^2/3")
        elif self.family == FAMILY_DISCRETE_IID:
            if self.probabilities is None or len(self.probabilities) != self.pdim:
                raise ValueError("discrete_iid needs one probability per letter")
            pr = tuple(float(v) for v in self.probabilities)
            object.__setattr__(self, "probabilities", pr)
            if any(v <= 0 for v in pr) or abs(sum(pr) - 1.0) > 1e-12:
                raise ValueError("probabilities must be positive and sum to 1")
            if any(abs(a - b) > 1e-12 for a, b in zip(pr, self.p)):
                raise ValueError("for discrete_iid, p equals the probabilities")
        elif self.family == FAMILY_CONSTANT_PLUS_WHITE:
            if self.half_widths is None or len(self.half_widths) != self.pdim - 1:
                raise ValueError(
                    "constant_plus_white needs half-widths for coordinates 2..pdim"
                )
            hw = tuple(float(a) for a in self.half_widths)
            object.__setattr__(self, "half_widths", hw)
            if abs(self.p[0] - 1.0) > 1e-12:
                raise ValueError("constant coordinate requires p_1 = 1")
            for a, ps in zip(hw, self.p[1:]):
                if a <= 0:
                    raise ValueError("half-widths must be positive")
                if abs(ps - a * a / 3.0) > 1e-9 * max(1.0, ps):
                    raise ValueError("p must equal the U(-a,a) variance a^2/3")

    # -- constructors -------------------------------------------------------

    @classmethod
    def white_uniform(cls, half_widths: Sequence[float]) -> "SchedulingSpec":
        hw = tuple(float(a) for a in half_widths)
        p = tuple(a * a / 3.0 for a in hw)
        return cls(pdim=len(hw), p=p, family=FAMILY_WHITE_UNIFORM, half_widths=hw)

    @classmethod
    def discrete_iid(cls, probabilities: Sequence[float]) -> "SchedulingSpec":
        pr = tuple(float(v) for v in probabilities)
        return cls(
            pdim=len(pr),
            p=pr,
            family=FAMILY_DISCRETE_IID,
            alpha=(1.0,) * len(pr),
            probabilities=pr,
        )

    @classmethod
    def constant_plus_white(cls, half_widths: Sequence[float]) -> "SchedulingSpec":
        hw = tuple(float(a) for a in half_widths)
        p = (1.0,) + tuple(a * a / 3.0 for a in hw)
        alpha = (1.0,) + (0.0,) * len(hw)
        return cls(
            pdim=1 + len(hw),
            p=p,
            family=FAMILY_CONSTANT_PLUS_WHITE,
            alpha=alpha,
            half_widths=hw,
        )

    @classmethod
    def from_moments(cls, p: Sequence[float]) -> "SchedulingSpec":
        p = tuple(float(v) for v in p)
        return cls(pdim=len(p), p=p)

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        out = {"pdim": self.pdim, "p": list(self.p)}
        if self.family is not None:
            out["family"] = self.family
        if self.alpha is not None:
            out["alpha"] = list(self.alpha)
        if self.half_widths is not None:
            out["half_widths"] = list(self.half_widths)
        if self.probabilities is not None:
            out["probabilities"] = list(self.probabilities)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "SchedulingSpec":
        family = d.get("family")
        if family == FAMILY_WHITE_UNIFORM:
            spec = cls.white_uniform(d["half_widths"])
        elif family == FAMILY_DISCRETE_IID:
            spec = cls.discrete_iid(d["probabilities"])
        elif family == FAMILY_CONSTANT_PLUS_WHITE:
            spec = cls.constant_plus_white(d["half_widths"])
        elif family is None:
            if "p" not in d:
                raise ValueError("scheduling spec needs a family or explicit p")
            return cls.from_moments(d["p"])
        else:
            raise ValueError(f"unknown family {family!r}")
        if "p" in d:
            given = [float(v) for v in d["p"]]
            if len(given) != spec.pdim or any(
                abs(a - b) > 1e-9 * max(1.0, b) for a, b in zip(given, spec.p)
            ):
                raise ValueError("explicit p conflicts with the family parameters")
        if "alpha" in d and d["alpha"] is not None:
            spec = cls(
                pdim=spec.pdim,
                p=spec.p,
                family=spec.family,
                alpha=tuple(float(v) for v in d["alpha"]),
                half_widths=spec.half_widths,
                probabilities=spec.probabilities,
            )
        return spec


def _matrix_family(values, count, shape, name):
    if len(values) != count:
        raise ValueError(f"{name} family has {len(values)} matrices, expected {count}")
    out = []
    for i, M in enumerate(values):
        M = check_finite(M, f"{name}[{i}]")
        if M.ndim != 2 or M.shape != shape:
            raise ValueError(f"{name}[{i}] has shape {M.shape}, expected {shape}")
        out.append(M)
    return tuple(out)


@dataclass
class AsLpvSsa:
    """Stochastic LPV state-space model ({A_s, K_s}, C, F) with noise second
    moments Q_s = E[v(t)v(t)^T mu_s(t)^2].

    Construction enforces dimension consistency and finiteness only; stability
    and Q positive semidefiniteness are reported by validate_aslpv.
    """

    A: tuple
    K: tuple
    C: np.ndarray
    F: np.ndarray
    Q: tuple

    def __post_init__(self):
        A = [check_finite(M, "A") for M in self.A]
        if not A:
            raise ValueError("A family is empty")
        n = A[0].shape[0]
        pdim = len(A)
        self.C = check_finite(self.C, "C")
        if self.C.ndim != 2 or self.C.shape[1] != n:
            raise ValueError(f"C has shape {self.C.shape}, expected (ny, {n})")
        ny = self.C.shape[0]
        self.F = check_finite(self.F, "F")
        if self.F.ndim != 2 or self.F.shape[0] != ny:
            raise ValueError(f"F has shape {self.F.shape}, expected ({ny}, m)")
        m = self.F.shape[1]
        self.A = _matrix_family(A, pdim, (n, n), "A")
        self.K = _matrix_family(self.K, pdim, (n, m), "K")
        self.Q = _matrix_family(self.Q, pdim, (m, m), "Q")

    @property
    def pdim(self) -> int:
        return len(self.A)

    @property
    def n(self) -> int:
        return self.A[0].shape[0]

    @property
    def ny(self) -> int:
        return self.C.shape[0]

    @property
    def m(self) -> int:
        return self.F.shape[1]

    def has_identity_f(self, tol: float = 1e-12) -> bool:
        return self.ny == self.m and np.allclose(
            self.F, np.eye(self.ny), atol=tol, rtol=0.0
        )


@dataclass
class DLpvSsa:
    """Deterministic LPV state-space model ({A_s, B_s}, C, D)."""

    A: tuple
    B: tuple
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        A = [check_finite(M, "A") for M in self.A]
        if not A:
            raise ValueError("A family is empty")
        n = A[0].shape[0]
        pdim = len(A)
        self.C = check_finite(self.C, "C")
        if self.C.ndim != 2 or self.C.shape[1] != n:
            raise ValueError(f"C has shape {self.C.shape}, expected (ny, {n})")
        ny = self.C.shape[0]
        self.D = check_finite(self.D, "D")
        if self.D.ndim != 2 or self.D.shape[0] != ny:
            raise ValueError(f"D has shape {self.D.shape}, expected ({ny}, nu)")
        nu = self.D.shape[1]
        self.A = _matrix_family(A, pdim, (n, n), "A")
        self.B = _matrix_family(self.B, pdim, (n, nu), "B")

    @property
    def pdim(self) -> int:
        return len(self.A)

    @property
    def n(self) -> int:
        return self.A[0].shape[0]

    @property
    def ny(self) -> int:
        return self.C.shape[0]

    @property
    def nu(self) -> int:
        return self.D.shape[1]


@dataclass
class ValidationReport:
    dims_ok: bool
    stable: bool
    spectral_radius: float
    q_psd: list
    q_min_eigenvalues: list
    messages: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.dims_ok and self.stable and all(self.q_psd)

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "dims_ok": self.dims_ok,
            "stable": self.stable,
            "spectral_radius": self.spectral_radius,
            "q_psd": list(self.q_psd),
            "q_min_eigenvalues": list(self.q_min_eigenvalues),
            "messages": list(self.messages),
        }


# Q eigenvalues down to -1e-10 still count as PSD (roundoff floor).
Q_PSD_FLOOR = -1e-10


def validate_aslpv(S: AsLpvSsa, spec: SchedulingSpec) -> ValidationReport:
    """Structural report: dimensions, Q_s PSD, mean-square stability radius."""
    messages = []
    dims_ok = True
    if spec.pdim != S.pdim:
        dims_ok = False
        messages.append(
            f"scheduling pdim {spec.pdim} does not match system pdim {S.pdim}"
        )
    q_psd = []
    q_min = []
    for i, Qs in enumerate(S.Q):
        sym_err = float(np.max(np.abs(Qs - Qs.T))) if Qs.size else 0.0
        lam = float(np.min(np.linalg.eigvalsh((Qs + Qs.T) / 2.0))) if Qs.size else 0.0
        q_min.append(lam)
        ok = lam >= Q_PSD_FLOOR and sym_err <= 1e-9 * max(1.0, float(np.abs(Qs).max() if Qs.size else 0.0))
        q_psd.append(bool(ok))
        if not ok:
            messages.append(f"Q[{i}] fails the PSD check (min eigenvalue {lam:.3e})")
    if dims_ok:
        radius = spectral_radius(ms_stability_matrix(S.A, spec.p))
        stable = bool(radius < 1.0)
        if not stable:
            messages.append(f"not mean-square stable (radius {radius:.6f})")
    else:
        radius = float("nan")
        stable = False
    return ValidationReport(
        dims_ok=dims_ok,
        stable=stable,
        spectral_radius=radius,
        q_psd=q_psd,
        q_min_eigenvalues=q_min,
        messages=messages,
    )


MAX_BASIS_CONDITION = 1e12


def _checked_inverse(T: np.ndarray, n: int):
    T = check_finite(T, "T")
    if T.shape != (n, n):
        raise ValueError(f"T has shape {T.shape}, expected ({n}, {n})")
    cond = np.linalg.cond(T)
    if not np.isfinite(cond) or cond > MAX_BASIS_CONDITION:
        raise ValueError(f"T is singular or ill-conditioned (cond {cond:.3e})")
    return T, np.linalg.inv(T)


def change_basis(S: AsLpvSsa, T: np.ndarray) -> AsLpvSsa:
    """State-space isomorphism: ({T A T^-1, T K}, C T^-1, F, Q)."""
    T, Ti = _checked_inverse(T, S.n)
    return AsLpvSsa(
        A=tuple(T @ A @ Ti for A in S.A),
        K=tuple(T @ K for K in S.K),
        C=S.C @ Ti,
        F=S.F.copy(),
        Q=tuple(Q.copy() for Q in S.Q),
    )


def change_basis_dlpv(D: DLpvSsa, T: np.ndarray) -> DLpvSsa:
    T, Ti = _checked_inverse(T, D.n)
    return DLpvSsa(
        A=tuple(T @ A @ Ti for A in D.A),
        B=tuple(T @ B for B in D.B),
        C=D.C @ Ti,
        D=D.D.copy(),
    )


# -- model JSON -------------------------------------------------------------


def aslpv_to_dict(
    S: AsLpvSsa,
    p: Optional[Sequence[float]] = None,
    provenance: Optional[dict] = None,
) -> dict:
    out = {
        "schema_version": MODEL_SCHEMA_VERSION,
        "pdim": S.pdim,
        "n": S.n,
        "ny": S.ny,
        "m": S.m,
        "A": [M.tolist() for M in S.A],
        "K": [M.tolist() for M in S.K],
        "C": S.C.tolist(),
        "F": S.F.tolist(),
        "Q": [M.tolist() for M in S.Q],
    }
    if p is not None:
        out["p"] = [float(v) for v in p]
    if provenance is not None:
        out["provenance"] = provenance
    return out


def aslpv_from_dict(d: dict):
    """Build (AsLpvSsa, SchedulingSpec or None) from the model JSON schema."""
    for key in ("pdim", "A", "K", "C", "F", "Q"):
        if key not in d:
            raise KeyError(f"model JSON is missing {key!r}")
    S = AsLpvSsa(
        A=tuple(np.asarray(M, dtype=float) for M in d["A"]),
        K=tuple(np.asarray(M, dtype=float) for M in d["K"]),
        C=np.asarray(d["C"], dtype=float),
        F=np.asarray(d["F"], dtype=float),
        Q=tuple(np.asarray(M, dtype=float) for M in d["Q"]),
    )
    if int(d["pdim"]) != S.pdim:
        raise ValueError(f"pdim field {d['pdim']} does not match {S.pdim} matrices")
    for key, val in (("n", S.n), ("ny", S.ny), ("m", S.m)):
        if key in d and int(d[key]) != val:
            raise ValueError(f"{key} field {d[key]} does not match matrices ({val})")
    spec = SchedulingSpec.from_moments(d["p"]) if "p" in d else None
    return S, spec


def load_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        return aslpv_from_dict(json.load(fh))


def save_model(path, S: AsLpvSsa, p=None, provenance=None):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(aslpv_to_dict(S, p=p, provenance=provenance), fh, indent=2)
        fh.write("\n")


def load_scheduling(path) -> SchedulingSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return SchedulingSpec.from_dict(json.load(fh))


def save_scheduling(path, spec: SchedulingSpec):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(spec.to_dict(), fh, indent=2)
        fh.write("\n")

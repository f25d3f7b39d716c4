"""Seeded random-system generators shared across the test suite."""
import numpy as np

from lpvssa import (
    AsLpvSsa,
    DLpvSsa,
    SchedulingSpec,
    change_basis_dlpv,
    innovation_triple,
    is_minimal_dlpv,
    is_stably_invertable,
    ms_stability_matrix,
    spectral_radius,
)


def random_spec(rng, pdim):
    """Moment-only scheduling spec with p in [0.3, 1.5]."""
    return SchedulingSpec.from_moments(rng.uniform(0.3, 1.5, size=pdim))


def scale_to_ms_radius(As, p, target):
    """Rescale a family so the mean-square stability radius hits target."""
    r = spectral_radius(ms_stability_matrix(As, p))
    c = np.sqrt(target / r) if r > 0 else 1.0
    return [c * A for A in As]


def random_stable_aslpv(rng, n, pdim, ny=1, m=None, target=0.7):
    """Mean-square-stable model with SPD base noise, Q_s = p_s Q_base."""
    m = ny if m is None else m
    spec = random_spec(rng, pdim)
    As = scale_to_ms_radius([rng.normal(size=(n, n)) for _ in range(pdim)],
                            spec.p, target)
    Ks = [0.5 * rng.normal(size=(n, m)) for _ in range(pdim)]
    C = rng.normal(size=(ny, n))
    F = np.eye(ny) if ny == m else rng.normal(size=(ny, m))
    L = rng.normal(size=(m, m))
    Q_base = L @ L.T + 0.3 * np.eye(m)
    S = AsLpvSsa(
        A=tuple(As),
        K=tuple(Ks),
        C=C,
        F=F,
        Q=tuple(ps * Q_base for ps in spec.p),
    )
    return S, spec


def random_innovation_aslpv(rng, n, pdim, ny=1, ms_target=0.6, closed_target=0.9):
    """Minimal, mean-square-stable, stably invertable innovation-form model."""
    for _ in range(50):
        spec = random_spec(rng, pdim)
        As = scale_to_ms_radius([rng.normal(size=(n, n)) for _ in range(pdim)],
                                spec.p, ms_target)
        C = rng.normal(size=(ny, n))
        Ks = [0.4 * rng.normal(size=(n, ny)) for _ in range(pdim)]
        for _ in range(60):
            closed = [A - K @ C for A, K in zip(As, Ks)]
            if spectral_radius(ms_stability_matrix(closed, spec.p)) < closed_target:
                break
            Ks = [0.5 * K for K in Ks]
        L = rng.normal(size=(ny, ny))
        Q_base = L @ L.T + 0.3 * np.eye(ny)
        S = AsLpvSsa(
            A=tuple(As),
            K=tuple(Ks),
            C=C,
            F=np.eye(ny),
            Q=tuple(ps * Q_base for ps in spec.p),
        )
        if not is_stably_invertable(S, spec).stably_invertable:
            continue
        if is_minimal_dlpv(innovation_triple(S)).minimal:
            return S, spec
    raise RuntimeError("failed to draw a minimal stably invertable system")


def random_minimal_dlpv(rng, n, pdim, ny=1, nu=1, target=0.7):
    """Random deterministic model; redraws until minimal (a near-certainty)."""
    p = np.ones(pdim)
    for _ in range(50):
        As = scale_to_ms_radius([rng.normal(size=(n, n)) for _ in range(pdim)],
                                p, target)
        D = DLpvSsa(
            A=tuple(As),
            B=tuple(rng.normal(size=(n, nu)) for _ in range(pdim)),
            C=rng.normal(size=(ny, n)),
            D=rng.normal(size=(ny, nu)),
        )
        if is_minimal_dlpv(D).minimal:
            return D
    raise RuntimeError("failed to draw a minimal system")


def well_conditioned_matrix(rng, n):
    """Invertible n x n matrix with singular values in [0.5, 2]."""
    if n == 0:
        return np.zeros((0, 0))
    U, _ = np.linalg.qr(rng.normal(size=(n, n)))
    V, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return U @ np.diag(rng.uniform(0.5, 2.0, size=n)) @ V


def pad_dlpv(rng, D, extra_unobs=1, extra_unreach=1, mix=True):
    """Embed D into a larger state space by stacking a reachable-but-
    unobservable block and an unreachable block, then optionally hide the
    structure behind a random well-conditioned basis change. The sub-Markov
    function is unchanged by construction."""
    n0 = D.n
    r1, r2 = extra_unobs, extra_unreach
    A2, B2 = [], []
    for A, B in zip(D.A, D.B):
        X = 0.3 * rng.normal(size=(r1, n0))
        J = (0.4 / max(np.sqrt(r1), 1.0)) * rng.normal(size=(r1, r1))
        A2.append(np.block([[A, np.zeros((n0, r1))], [X, J]]))
        B2.append(np.vstack([B, 0.5 * rng.normal(size=(r1, D.nu))]))
    C2 = np.hstack([D.C, np.zeros((D.ny, r1))])
    n2 = n0 + r1
    A3, B3 = [], []
    for A, B in zip(A2, B2):
        Z = 0.3 * rng.normal(size=(n2, r2))
        G = (0.4 / max(np.sqrt(r2), 1.0)) * rng.normal(size=(r2, r2))
        A3.append(np.block([[A, Z], [np.zeros((r2, n2)), G]]))
        B3.append(np.vstack([B, np.zeros((r2, D.nu))]))
    C3 = np.hstack([C2, 0.5 * rng.normal(size=(D.ny, r2))])
    padded = DLpvSsa(A=tuple(A3), B=tuple(B3), C=C3, D=D.D.copy())
    if mix:
        padded = change_basis_dlpv(padded, well_conditioned_matrix(rng, padded.n))
    return padded

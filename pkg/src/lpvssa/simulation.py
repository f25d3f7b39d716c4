"""Sample-path generation, empirical covariance estimation, the recursive
innovation filter, and output-divergence comparison of model pairs."""
from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .algebra import scheduling_weight
from .models import (
    FAMILY_CONSTANT_PLUS_WHITE,
    FAMILY_DISCRETE_IID,
    FAMILY_WHITE_UNIFORM,
    AsLpvSsa,
    SchedulingSpec,
    validate_aslpv,
)
from .stochastic import is_stably_invertable

DEFAULT_BURN_IN = 1000


@dataclass
class Trajectory:
    """Sampled scheduling path, with output/state/noise paths when simulated."""

    mu: np.ndarray
    y: Optional[np.ndarray] = None
    x: Optional[np.ndarray] = None
    v: Optional[np.ndarray] = None
    seed: Optional[int] = None
    noise_seed: Optional[int] = None
    spec: Optional[SchedulingSpec] = None

    @property
    def length(self) -> int:
        return self.mu.shape[0]

    @property
    def pdim(self) -> int:
        return self.mu.shape[1]

    def __len__(self) -> int:
        return self.length


def gen_scheduling(spec: SchedulingSpec, T: int, seed: int) -> Trajectory:
    """Draw T i.i.d. scheduling vectors from the spec's family."""
    if T < 1:
        raise ValueError("T must be >= 1")
    if spec.family is None:
        raise ValueError("scheduling spec has no generator family to sample from")
    rng = np.random.default_rng(seed)
    if spec.family == FAMILY_WHITE_UNIFORM:
        mu = rng.uniform(-1.0, 1.0, size=(T, spec.pdim)) * np.asarray(spec.half_widths)
    elif spec.family == FAMILY_DISCRETE_IID:
        idx = rng.choice(spec.pdim, size=T, p=np.asarray(spec.probabilities))
        mu = np.zeros((T, spec.pdim))
        mu[np.arange(T), idx] = 1.0
    elif spec.family == FAMILY_CONSTANT_PLUS_WHITE:
        mu = np.empty((T, spec.pdim))
        mu[:, 0] = 1.0
        if spec.pdim > 1:
            mu[:, 1:] = rng.uniform(-1.0, 1.0, size=(T, spec.pdim - 1)) * np.asarray(
                spec.half_widths
            )
    else:  # pragma: no cover - families validated at construction
        raise ValueError(f"unknown family {spec.family!r}")
    return Trajectory(mu=mu, seed=int(seed), spec=spec)


def noise_base_covariance(S: AsLpvSsa, spec: SchedulingSpec) -> np.ndarray:
    """Q_base with Q_s = p_s * Q_base; the noise is white and independent of
    the scheduling, so per-regime moments must be proportional to p."""
    if spec.pdim != S.pdim:
        raise ValueError("scheduling pdim does not match system pdim")
    candidates = [Q / ps for Q, ps in zip(S.Q, spec.p)]
    base = sum(candidates) / len(candidates)
    scale = max(1.0, float(np.abs(base).max()) if base.size else 0.0)
    for i, cand in enumerate(candidates):
        if float(np.max(np.abs(cand - base))) > 1e-8 * scale:
            raise ValueError(
                "Q is not proportional to p; scheduling-independent white noise "
                f"cannot realize these moments (offending block {i})"
            )
    return base


def _psd_factor(Q: np.ndarray) -> np.ndarray:
    """L with L L^T = Q for symmetric PSD Q (eigen square root)."""
    if Q.size == 0:
        return Q.copy()
    lam, V = np.linalg.eigh((Q + Q.T) / 2.0)
    if lam.min() < -1e-10 * max(1.0, float(lam.max())):
        raise ValueError("noise covariance is not positive semidefinite")
    return V * np.sqrt(np.clip(lam, 0.0, None))


def simulate(
    S: AsLpvSsa,
    mu: Trajectory,
    noise_seed: int = 0,
    T: Optional[int] = None,
    burn_in: int = 0,
    spec: Optional[SchedulingSpec] = None,
    v: Optional[np.ndarray] = None,
    noise_base: Optional[np.ndarray] = None,
) -> Trajectory:
    """Run x(t+1) = sum_s (A_s x(t) + K_s v(t)) mu_s(t), y = C x + F v.

    The state starts at zero and the first burn_in samples are dropped, so the
    retained T samples approximate the stationary solution. The scheduling
    trajectory must cover burn_in + T samples. Noise is N(0, Q_base) i.i.d.
    unless an explicit v path is supplied. By default Q_base is recovered from
    the model's Q blocks and the spec's p; pass noise_base to keep the noise
    law fixed while simulating under a different scheduling distribution.
    """
    spec = spec or mu.spec
    if spec is None:
        raise ValueError("a scheduling spec is required (for stability and noise)")
    if burn_in < 0:
        raise ValueError("burn_in must be >= 0")
    total = mu.length
    if T is None:
        T = total - burn_in
    if T < 1:
        raise ValueError("T must be >= 1")
    if total < burn_in + T:
        raise ValueError(
            f"scheduling trajectory has {total} samples, need burn_in + T = {burn_in + T}"
        )
    if mu.pdim != S.pdim:
        raise ValueError("scheduling dimension does not match the system")
    report = validate_aslpv(S, spec)
    if not report.stable:
        raise ValueError(
            f"system is not mean-square stable (radius {report.spectral_radius:.6f})"
        )
    total = burn_in + T
    mu_arr = mu.mu[:total]
    if v is None:
        if noise_base is None:
            noise_base = noise_base_covariance(S, spec)
        L = _psd_factor(np.asarray(noise_base, dtype=float))
        v = np.random.default_rng(noise_seed).standard_normal((total, S.m)) @ L.T
    else:
        v = np.asarray(v, dtype=float)
        if v.shape != (total, S.m):
            raise ValueError(f"v path has shape {v.shape}, expected ({total}, {S.m})")

    A_mu = np.tensordot(mu_arr, np.stack(S.A), axes=(1, 0))  # (total, n, n)
    Kv = np.einsum("ti,inm,tm->tn", mu_arr, np.stack(S.K), v)
    x = np.empty((total, S.n))
    xt = np.zeros(S.n)
    for t in range(total):
        x[t] = xt
        xt = A_mu[t] @ xt + Kv[t]
    y = x @ S.C.T + v @ S.F.T
    keep = slice(burn_in, total)
    return Trajectory(
        mu=mu_arr[keep].copy(),
        y=y[keep],
        x=x[keep],
        v=v[keep],
        seed=mu.seed,
        noise_seed=int(noise_seed),
        spec=spec,
    )


def simulate_system(
    S: AsLpvSsa,
    spec: SchedulingSpec,
    T: int,
    scheduling_seed: int = 0,
    noise_seed: int = 0,
    burn_in: int = DEFAULT_BURN_IN,
    noise_base: Optional[np.ndarray] = None,
) -> Trajectory:
    """Generate scheduling and simulate in one call."""
    mu = gen_scheduling(spec, T + burn_in, scheduling_seed)
    return simulate(
        S, mu, noise_seed=noise_seed, T=T, burn_in=burn_in, spec=spec,
        noise_base=noise_base,
    )


@dataclass
class PsiEstimate:
    value: np.ndarray
    stderr: np.ndarray
    count: int


def predictor_path(traj: Trajectory, spec: SchedulingSpec, w) -> np.ndarray:
    """The lagged predictor z_w^y(t) = y(t - |w|) u_w(t-1) / sqrt(p_w), as an
    array aligned so that row i is z at time t = i + |w|. The empty word gives
    z(t) = y(t)."""
    if traj.y is None:
        raise ValueError("trajectory has no output path")
    w = tuple(w)
    k = len(w)
    T = traj.length
    if k >= T:
        raise ValueError(f"word of length {k} needs a trajectory longer than {T}")
    for s in w:
        if not 1 <= s <= spec.pdim:
            raise ValueError(f"letter {s} outside [1, {spec.pdim}]")
    if k == 0:
        return traj.y.copy()
    N = T - k
    prod = np.ones(N)
    for j, s in enumerate(w):
        prod *= traj.mu[j : j + N, s - 1]
    return traj.y[:N] * (prod / np.sqrt(scheduling_weight(spec.p, w)))[:, None]


def _mean_with_batch_se(lead: np.ndarray, z: np.ndarray):
    """Mean of g(t) = lead(t) z(t)^T with a batch-means standard error; the
    sequence g is serially correlated, so the naive iid error would be
    optimistic. Falls back to the iid estimate for very short runs."""
    N = lead.shape[0]
    value = lead.T @ z / N
    batches = min(1024, N // 32)
    if batches >= 8:
        L = N // batches
        trunc = batches * L
        bl = lead[:trunc].reshape(batches, L, -1)
        bz = z[:trunc].reshape(batches, L, -1)
        means = np.einsum("bln,blm->bnm", bl, bz) / L
        var = means.var(axis=0, ddof=1)
        se = np.sqrt(var / batches)
    else:
        m2 = (lead**2).T @ (z**2) / N
        var = np.clip(m2 - value**2, 0.0, None) * (N / max(N - 1, 1))
        se = np.sqrt(var / N)
    return value, se


def empirical_psi(
    traj: Trajectory, spec: SchedulingSpec, words: Sequence[tuple]
) -> dict:
    """Time-average estimates of E[y(t) z_w^y(t)^T] with batch-means standard
    errors. The empty word uses the convention z = y(t) (sample second moment
    of the output)."""
    if traj.y is None:
        raise ValueError("trajectory has no output path")
    y = traj.y
    out = {}
    for w in words:
        w = tuple(w)
        k = len(w)
        z = predictor_path(traj, spec, w)
        lead = y[k:]
        value, se = _mean_with_batch_se(lead, z)
        out[w] = PsiEstimate(value=value, stderr=se, count=lead.shape[0])
    return out


@dataclass
class FilterResult:
    xbar: np.ndarray
    ybar: np.ndarray
    err: np.ndarray


def innovation_filter(
    S: AsLpvSsa, traj: Trajectory, spec: Optional[SchedulingSpec] = None
) -> FilterResult:
    """Recursive output predictor for stably invertable F = I models:
    xbar(t+1) = sum_s ((A_s - K_s C) xbar(t) + K_s y(t)) mu_s(t), xbar(0) = 0.

    err = y - C xbar converges to the innovation process in mean square.
    """
    spec = spec or traj.spec
    if spec is None:
        raise ValueError("a scheduling spec is required for the invertability check")
    report = is_stably_invertable(S, spec)
    if not report.stably_invertable:
        raise ValueError(f"filter requires stable invertability (radius {report.radius:.6f})")
    if traj.y is None:
        raise ValueError("trajectory has no output path")
    if traj.pdim != S.pdim:
        raise ValueError("scheduling dimension does not match the system")
    y = traj.y
    mu = traj.mu
    T = traj.length
    closed = np.stack([A - K @ S.C for A, K in zip(S.A, S.K)])
    F_mu = np.tensordot(mu, closed, axes=(1, 0))
    Ky = np.einsum("ti,inm,tm->tn", mu, np.stack(S.K), y)
    xbar = np.empty((T, S.n))
    xt = np.zeros(S.n)
    for t in range(T):
        xbar[t] = xt
        xt = F_mu[t] @ xt + Ky[t]
    ybar = xbar @ S.C.T
    return FilterResult(xbar=xbar, ybar=ybar, err=y - ybar)


@dataclass
class DivergenceStats:
    mse_diff: float
    output_power: float
    ratio: float
    shared_noise: bool
    T: int

    def to_dict(self) -> dict:
        return {
            "mse_diff": self.mse_diff,
            "output_power": self.output_power,
            "ratio": self.ratio,
            "shared_noise": self.shared_noise,
            "T": self.T,
        }


def compare_outputs(
    S1: AsLpvSsa,
    S2: AsLpvSsa,
    spec: SchedulingSpec,
    scheduling_seed: int = 0,
    noise_seed: int = 0,
    T: int = 10000,
    burn_in: int = DEFAULT_BURN_IN,
    noise_base: Optional[np.ndarray] = None,
) -> DivergenceStats:
    """Mean-square output difference under one shared scheduling path.

    When the noise dimensions match, the raw noise path of S1 drives S2 as
    well; otherwise S2 gets an independent draw and the stats are flagged.
    Pass noise_base to pin the noise law when spec is not the scheduling the
    models' Q blocks were computed under.
    """
    if S1.ny != S2.ny:
        raise ValueError("output dimensions differ")
    mu = gen_scheduling(spec, T + burn_in, scheduling_seed)
    if noise_base is None:
        noise_base = noise_base_covariance(S1, spec)
    L = _psd_factor(np.asarray(noise_base, dtype=float))
    full_v = np.random.default_rng(noise_seed).standard_normal((burn_in + T, S1.m)) @ L.T
    t1 = simulate(S1, mu, T=T, burn_in=burn_in, spec=spec, v=full_v)
    shared = S1.m == S2.m
    if shared:
        t2 = simulate(S2, mu, T=T, burn_in=burn_in, spec=spec, v=full_v)
    else:
        t2 = simulate(S2, mu, noise_seed=noise_seed + 1, T=T, burn_in=burn_in, spec=spec)
    diff = t1.y - t2.y
    mse = float(np.mean(np.sum(diff**2, axis=1)))
    power = float(np.mean(np.sum(t1.y**2, axis=1)))
    ratio = mse / power if power > 0 else float("inf")
    return DivergenceStats(
        mse_diff=mse, output_power=power, ratio=ratio, shared_noise=shared, T=T
    )


# -- trajectory files --------------------------------------------------------


def sidecar_path(csv_path) -> str:
    return os.path.splitext(os.fspath(csv_path))[0] + ".meta.json"


def save_trajectory_csv(traj: Trajectory, path) -> str:
    """Write t, mu_*, y_*, x_*, v_* columns plus a JSON sidecar with seeds and
    the scheduling spec. Returns the sidecar path."""
    cols = [("mu", traj.mu)]
    if traj.y is not None:
        cols.append(("y", traj.y))
    if traj.x is not None:
        cols.append(("x", traj.x))
    if traj.v is not None:
        cols.append(("v", traj.v))
    header = ["t"]
    for name, arr in cols:
        header.extend(f"{name}_{i + 1}" for i in range(arr.shape[1]))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for t in range(traj.length):
            row = [t]
            for _, arr in cols:
                row.extend(repr(float(val)) for val in arr[t])
            writer.writerow(row)
    meta = {
        "length": traj.length,
        "seed": traj.seed,
        "noise_seed": traj.noise_seed,
        "scheduling": traj.spec.to_dict() if traj.spec is not None else None,
        "columns": header,
    }
    side = sidecar_path(path)
    with open(side, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    return side


def load_trajectory_csv(path) -> Trajectory:
    """Read a trajectory written by save_trajectory_csv (sidecar optional)."""
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    data = np.asarray(rows)
    groups = {}
    for j, name in enumerate(header):
        if name == "t":
            continue
        base = name.rsplit("_", 1)[0]
        groups.setdefault(base, []).append(j)
    def block(base):
        return data[:, groups[base]] if base in groups else None
    if "mu" not in groups:
        raise ValueError("trajectory CSV has no mu_* columns")
    seed = noise_seed = spec = None
    side = sidecar_path(path)
    if os.path.exists(side):
        with open(side, "r", encoding="utf-8") as fh:
            meta = json.load(fh)
        seed = meta.get("seed")
        noise_seed = meta.get("noise_seed")
        if meta.get("scheduling"):
            spec = SchedulingSpec.from_dict(meta["scheduling"])
    return Trajectory(
        mu=block("mu"),
        y=block("y"),
        x=block("x"),
        v=block("v"),
        seed=seed,
        noise_seed=noise_seed,
        spec=spec,
    )

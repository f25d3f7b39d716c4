"""Bundled benchmark models and their reference reductions.

Three small single-output models over a two-coordinate scheduling process
(mu_1 = 1, mu_2 white uniform on (-1.5, 1.5), so p = (1, 0.75)):

  1: three states, only two of which shape the output covariances;
  2: two states, minimal but not stably invertable;
  3: two states, minimal innovation form (stably invertable).

REFERENCE_MINIMIZED holds the published 4-decimal reduced-order matrices for
each benchmark, and REFERENCE_BASIS_3 the basis change linking benchmark 3 to
its reduction; the reproduction checks compare against these.
"""
from __future__ import annotations

import json
from importlib import resources

import numpy as np

from .models import AsLpvSsa, DLpvSsa, SchedulingSpec, aslpv_from_dict

BENCHMARK_IDS = (1, 2, 3)


def _data(name: str) -> dict:
    with resources.files("lpvssa.data").joinpath(name).open("r", encoding="utf-8") as fh:
        return json.load(fh)


def benchmark_model(k: int) -> AsLpvSsa:
    if k not in BENCHMARK_IDS:
        raise ValueError(f"benchmark id must be one of {BENCHMARK_IDS}")
    model, _ = aslpv_from_dict(_data(f"benchmark{k}.json"))
    return model


def default_scheduling() -> SchedulingSpec:
    """The benchmarks' scheduling: mu_1 = 1, mu_2 ~ U(-1.5, 1.5)."""
    return SchedulingSpec.from_dict(_data("scheduling.json"))


def alt_scheduling() -> SchedulingSpec:
    """Swapped scheduling with mu_2 ~ U(-sqrt(3), sqrt(3)), so p_2 = 1."""
    return SchedulingSpec.from_dict(_data("scheduling_alt.json"))


def load_benchmark(k: int):
    """(model, scheduling) pair for benchmark k."""
    return benchmark_model(k), default_scheduling()


# Reference reduced-order matrices (4-decimal published values).
REFERENCE_MINIMIZED = {
    1: {
        "A": [
            np.array([[0.4007, 0.3997], [0.1997, 0.0993]]),
            np.array([[0.1003, 0.1002], [0.2002, 0.2997]]),
        ],
        "K": [
            np.array([[-0.0460], [-0.0541]]),
            np.array([[-0.0116], [-0.0578]]),
        ],
        "C": np.array([[-10.0, 0.0116]]),
        "F": np.array([[1.0]]),
    },
    2: {
        "A": [
            np.array([[0.4007, -0.3997], [-0.1997, 0.0993]]),
            np.array([[0.1003, -0.1002], [-0.2002, 0.2997]]),
        ],
        "K": [
            np.array([[-0.0460], [0.0541]]),
            np.array([[-0.0116], [0.0578]]),
        ],
        "C": np.array([[-10.0, -0.0116]]),
        "F": np.array([[1.0]]),
    },
    3: {
        "A": [
            np.array([[0.4642, -0.3581], [-0.1581, 0.0358]]),
            np.array([[0.1367, -0.1188], [-0.2188, 0.2633]]),
        ],
        "K": [
            np.array([[-0.1143], [0.9934]]),
            np.array([[-0.1143], [0.9934]]),
        ],
        "C": np.array([[-0.9934, -0.1143]]),
        "F": np.array([[1.0]]),
    },
}

# Basis change linking benchmark 3 to its reference reduction.
REFERENCE_BASIS_3 = np.array([[-0.9934, -0.1143], [-0.1143, 0.9934]])


def reference_triple(k: int) -> DLpvSsa:
    """The reference reduction's ({A, K}, C, I) carrier as a DLpvSsa."""
    ref = REFERENCE_MINIMIZED[k]
    ny = ref["C"].shape[0]
    return DLpvSsa(
        A=tuple(M.copy() for M in ref["A"]),
        B=tuple(M.copy() for M in ref["K"]),
        C=ref["C"].copy(),
        D=np.eye(ny),
    )

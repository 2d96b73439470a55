"""Timing libraries: per-arc Gaussian delay models and sampled instances.

A variation library carries one (mu, sigma) pair per timing arc, where an
arc is (cell kind, input pin, output edge).  Sampling draws one delay per
arc from a split global/local Gaussian model, producing a deterministic
plain-number library for STA.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .netlist import CELLS

EDGES = ("fall", "rise")  # alphabetical; canonical arc order relies on this

ArcKey = tuple[str, str, str]  # (cell, pin, edge)


class LibraryError(Exception):
    """Malformed library data."""


@dataclass(frozen=True)
class TimingArc:
    pin: str
    edge: str
    mu_ps: float
    sigma_ps: float

    def __post_init__(self):
        if self.edge not in EDGES:
            raise LibraryError(f"bad edge {self.edge!r}")
        if not (self.mu_ps > 0.0):
            raise LibraryError(f"arc {self.pin}/{self.edge}: mu must be > 0")
        if self.sigma_ps < 0.0:
            raise LibraryError(f"arc {self.pin}/{self.edge}: sigma must be >= 0")
        if self.sigma_ps > 0.5 * self.mu_ps:
            raise LibraryError(
                f"arc {self.pin}/{self.edge}: sigma/mu = "
                f"{self.sigma_ps / self.mu_ps:.3f} exceeds 0.5"
            )


class VariationLibrary:
    """Gaussian delay model per arc for a set of cell kinds."""

    def __init__(self, name: str, cells: dict[str, list[TimingArc]], rho_default=0.5):
        self.name = str(name)
        if not (0.0 <= rho_default <= 1.0):
            raise LibraryError(f"rho_default {rho_default} outside [0, 1]")
        self.rho_default = float(rho_default)
        self.cells: dict[str, tuple[TimingArc, ...]] = {}
        for kind in sorted(cells):
            cell = CELLS.get(kind)
            if cell is None:
                raise LibraryError(f"unknown cell kind {kind!r}")
            arcs = {(a.pin, a.edge): a for a in cells[kind]}
            if len(arcs) != len(cells[kind]):
                raise LibraryError(f"{kind}: duplicate arc")
            want = [(p, e) for p in cell.input_pins for e in EDGES]
            if sorted(arcs) != sorted(want):
                raise LibraryError(
                    f"{kind}: arcs {sorted(arcs)} do not cover {sorted(want)}"
                )
            self.cells[kind] = tuple(
                arcs[(p, e)] for p in sorted(cell.input_pins) for e in EDGES
            )
        self._arc_order: tuple[ArcKey, ...] = tuple(
            (kind, a.pin, a.edge) for kind in sorted(self.cells)
            for a in self.cells[kind]
        )
        self._arc_index = {k: i for i, k in enumerate(self._arc_order)}
        self._mu = np.array([self.arc(*k).mu_ps for k in self._arc_order])
        self._sigma = np.array([self.arc(*k).sigma_ps for k in self._arc_order])

    def arc(self, kind: str, pin: str, edge: str) -> TimingArc:
        for a in self.cells[kind]:
            if a.pin == pin and a.edge == edge:
                return a
        raise KeyError((kind, pin, edge))

    def arc_order(self) -> tuple[ArcKey, ...]:
        """Canonical arc ordering: cells alphabetical, arcs by (pin, edge)."""
        return self._arc_order

    def arc_index(self) -> dict[ArcKey, int]:
        return self._arc_index

    def mu_vector(self) -> np.ndarray:
        return self._mu.copy()

    def sigma_vector(self) -> np.ndarray:
        return self._sigma.copy()


class SampledLibrary:
    """One concrete delay per arc, drawn from a VariationLibrary."""

    def __init__(self, name, seed, arc_order, values):
        self.name = str(name)
        self.seed = int(seed)
        self._arc_order = tuple(arc_order)
        self._values = np.asarray(values, dtype=np.float64)
        if self._values.shape != (len(self._arc_order),):
            raise LibraryError("value vector does not match arc order")
        if np.any(self._values <= 0.0):
            raise LibraryError("sampled delays must be positive")
        self.delays: dict[ArcKey, float] = {
            k: float(v) for k, v in zip(self._arc_order, self._values)
        }

    def delay(self, kind: str, pin: str, edge: str) -> float:
        return self.delays[(kind, pin, edge)]

    def arc_order(self) -> tuple[ArcKey, ...]:
        return self._arc_order

    def arc_index(self) -> dict[ArcKey, int]:
        return {k: i for i, k in enumerate(self._arc_order)}

    def values(self) -> np.ndarray:
        return self._values.copy()


def _sample_row(lib: VariationLibrary, seed: int, rho: float) -> np.ndarray:
    rng = np.random.default_rng(seed)
    g = rng.standard_normal()
    z = rng.standard_normal(len(lib.arc_order()))
    mu = lib._mu
    sigma = lib._sigma
    raw = mu + sigma * (math.sqrt(rho) * g + math.sqrt(1.0 - rho) * z)
    return np.maximum(0.05 * mu, raw)


def sample_library(lib: VariationLibrary, seed: int, rho=None) -> SampledLibrary:
    """Draw one delay per arc: mu + sigma*(sqrt(rho)*g + sqrt(1-rho)*z).

    g is a single global draw shared by all arcs, z is independent per arc,
    both from numpy's default generator seeded with `seed`.  Delays clamp
    at 5% of mu from below.
    """
    if rho is None:
        rho = lib.rho_default
    if not (0.0 <= rho <= 1.0):
        raise LibraryError(f"rho {rho} outside [0, 1]")
    return SampledLibrary(
        f"{lib.name}@{seed}", seed, lib.arc_order(), _sample_row(lib, seed, rho)
    )


def sample_matrix(lib: VariationLibrary, seeds, rho=None) -> np.ndarray:
    """Stack sample_library value rows for `seeds`: shape (len(seeds), arcs)."""
    if rho is None:
        rho = lib.rho_default
    if not (0.0 <= rho <= 1.0):
        raise LibraryError(f"rho {rho} outside [0, 1]")
    seeds = list(seeds)
    out = np.empty((len(seeds), len(lib.arc_order())), dtype=np.float64)
    for i, s in enumerate(seeds):
        out[i] = _sample_row(lib, s, rho)
    return out


def nominal_library(lib: VariationLibrary) -> SampledLibrary:
    """Sampled view pinning every arc at its mean delay."""
    return SampledLibrary(f"{lib.name}@nominal", 0, lib.arc_order(), lib._mu)


# -- persistence -------------------------------------------------------------


def save_variation_library(path, lib: VariationLibrary):
    doc = {
        "name": lib.name,
        "rho_default": lib.rho_default,
        "cells": {
            kind: [
                {"pin": a.pin, "edge": a.edge, "mu_ps": a.mu_ps, "sigma_ps": a.sigma_ps}
                for a in lib.cells[kind]
            ]
            for kind in sorted(lib.cells)
        },
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


def load_variation_library(path) -> VariationLibrary:
    with open(path) as f:
        doc = json.load(f)
    try:
        cells = {
            kind: [TimingArc(a["pin"], a["edge"], a["mu_ps"], a["sigma_ps"]) for a in arcs]
            for kind, arcs in doc["cells"].items()
        }
        return VariationLibrary(doc["name"], cells, doc.get("rho_default", 0.5))
    except (KeyError, TypeError) as e:
        raise LibraryError(f"malformed library file {path}: {e}") from e


_DEFAULT_MU = {
    # (kind, pin) -> (rise mu, fall mu); sigma is 8% of mu on every arc.
    ("INV", "A"): (10.0, 9.0),
    ("BUF", "A"): (12.0, 11.0),
    ("NAND2", "A"): (13.0, 12.0),
    ("NAND2", "B"): (14.0, 13.0),
    ("NOR2", "A"): (15.0, 14.0),
    ("NOR2", "B"): (16.0, 15.0),
    ("AND2", "A"): (17.0, 16.0),
    ("AND2", "B"): (18.0, 17.0),
    ("OR2", "A"): (19.0, 18.0),
    ("OR2", "B"): (20.0, 19.0),
    ("XOR2", "A"): (23.0, 22.0),
    ("XOR2", "B"): (24.0, 23.0),
    ("XNOR2", "A"): (24.0, 23.0),
    ("XNOR2", "B"): (25.0, 24.0),
    ("MUX2", "A"): (21.0, 20.0),
    ("MUX2", "B"): (22.0, 21.0),
    ("MUX2", "S"): (25.0, 24.0),
}


def default_library() -> VariationLibrary:
    """Built-in synthetic library covering all supported cells (sigma/mu = 0.08)."""
    cells: dict[str, list[TimingArc]] = {}
    for (kind, pin), (mu_r, mu_f) in _DEFAULT_MU.items():
        cells.setdefault(kind, []).append(TimingArc(pin, "rise", mu_r, 0.08 * mu_r))
        cells[kind].append(TimingArc(pin, "fall", mu_f, 0.08 * mu_f))
    return VariationLibrary("default", cells, rho_default=0.5)

"""Deterministic Lorentzian-notch forward model for unit-cell reflection spectra.

Stands in for full-wave electromagnetic simulation: each distinct tile id in
a cell contributes one notch per polarization, with depth and width set by
how many slots hold that id and the center shifted by where those slots sit
(mean row for TE, mean column for TM).  Reflection is a dB-domain sum of
Lorentzians sampled on a fixed 4-45 GHz grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .geometry import GRID_SIZE, UnitCell

F_START_GHZ = 4.0
F_STOP_GHZ = 45.0
F_STEP_GHZ = 0.05
N_SAMPLES = 821
FLOOR_DB = -60.0

# One notch per distinct tile id: base frequency 6 + 5*id GHz, depth and
# halfwidth grow with the id's slot count, center shifts by half a GHz per
# unit of mean-position offset from the grid center (1.5).
BASE_FREQ_GHZ = 6.0
FREQ_PER_ID_GHZ = 5.0
POSITION_SHIFT_GHZ = 0.5
DEPTH_BASE_DB = -6.0
DEPTH_PER_SLOT_DB = -3.0
DEPTH_CLAMP_DB = -40.0
HALFWIDTH_BASE_GHZ = 0.15
HALFWIDTH_PER_SLOT_GHZ = 0.05

SURROGATE_VERSION = 1


class Polarization(Enum):
    TE = "TE"
    TM = "TM"


def frequency_grid() -> np.ndarray:
    """The 821-point sampling grid covering [4, 45] GHz inclusive."""
    return F_START_GHZ + F_STEP_GHZ * np.arange(N_SAMPLES)


@dataclass(frozen=True)
class NotchParams:
    center: float
    depth: float
    halfwidth: float

    def __post_init__(self):
        if not F_START_GHZ <= self.center <= F_STOP_GHZ:
            raise ValueError(f"notch center {self.center} outside [4, 45] GHz")
        if self.depth >= 0:
            raise ValueError("notch depth must be negative dB")
        if self.halfwidth <= 0:
            raise ValueError("notch halfwidth must be positive")


@dataclass(frozen=True)
class ReflectionSpectrum:
    pol: Polarization
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.shape != (N_SAMPLES,):
            raise ValueError(f"expected {N_SAMPLES} samples, got {samples.shape}")
        if samples.max() > 0.0 or samples.min() < FLOOR_DB:
            raise ValueError(f"samples must lie in [{FLOOR_DB}, 0] dB")
        samples = samples.copy()
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def frequencies(self) -> np.ndarray:
        return frequency_grid()


def notch_params(cell: UnitCell, pol: Polarization) -> list[NotchParams]:
    """Notch parameters for each distinct tile id present in the cell."""
    grid = cell.grid()
    notches = []
    for tile_id in sorted(set(cell.tiles)):
        rows, cols = np.nonzero(grid == tile_id)
        count = len(rows)
        mean_pos = rows.mean() if pol is Polarization.TE else cols.mean()
        center = BASE_FREQ_GHZ + FREQ_PER_ID_GHZ * tile_id \
            + POSITION_SHIFT_GHZ * (mean_pos - (GRID_SIZE - 1) / 2)
        center = float(np.clip(center, F_START_GHZ, F_STOP_GHZ))
        depth = max(DEPTH_CLAMP_DB, DEPTH_BASE_DB + DEPTH_PER_SLOT_DB * count)
        halfwidth = HALFWIDTH_BASE_GHZ + HALFWIDTH_PER_SLOT_GHZ * count
        notches.append(NotchParams(center, depth, halfwidth))
    return notches


def lorentzian_sum(freqs: np.ndarray, notches) -> np.ndarray:
    """dB-domain sum of Lorentzian dips, clamped to [-60, 0]."""
    total = np.zeros_like(freqs, dtype=float)
    for n in notches:
        total += n.depth * n.halfwidth**2 / ((freqs - n.center) ** 2 + n.halfwidth**2)
    return np.clip(total, FLOOR_DB, 0.0)


def reflection_spectrum(cell: UnitCell, pol: Polarization) -> ReflectionSpectrum:
    """Sampled reflection amplitude in dB for one polarization."""
    samples = lorentzian_sum(frequency_grid(), notch_params(cell, pol))
    return ReflectionSpectrum(pol, samples)


def spectra_csv(te: ReflectionSpectrum, tm: ReflectionSpectrum) -> str:
    """CSV export of a TE/TM spectrum pair, fixed 6-decimal formatting."""
    if te.pol is not Polarization.TE or tm.pol is not Polarization.TM:
        raise ValueError("spectra_csv expects (TE, TM) spectra in that order")
    lines = ["freq_ghz,te_db,tm_db"]
    for f, a, b in zip(frequency_grid(), te.samples, tm.samples):
        lines.append(f"{f:.6f},{a:.6f},{b:.6f}")
    return "\n".join(lines) + "\n"

"""Dataset generation, train/test orchestration, evaluation, and closed-loop checks."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import network as nn
from .estimator import MetasurfaceDesigner
from .features import DesignTarget, assemble_input, extract_notches, target_of_cell
from .geometry import N_BITS, N_SLOTS, N_TILE_IDS, UnitCell, decode_bits, decode_soft, encode_bits
from .surrogate import SURROGATE_VERSION, Polarization, reflection_spectrum

DATASET_FORMAT_VERSION = 1
DEFAULT_MATCH_TOL_GHZ = 0.5


@dataclass(frozen=True)
class DatasetRecord:
    """One labeled sample: cell provenance, normalized input, 48-bit label."""

    seed_index: int
    cell: UnitCell
    input: np.ndarray = field(repr=False)
    label: np.ndarray = field(repr=False)


@dataclass
class TrainConfig:
    epochs: int = 5000
    learning_rate: float = 3e-3
    dropout: float = 0.2
    split: float = 0.7
    batch_size: int | None = None
    seed: int = 0
    patience: int | None = None
    hidden: tuple = (64, 128, 256, 256, 128)

    def __post_init__(self):
        if not 0.0 < self.split < 1.0:
            raise ValueError(f"split ratio must be in (0, 1), got {self.split}")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass
class TrainReport:
    """Per-epoch series plus run metadata; series lengths equal epochs run."""

    train_mse: list
    test_mse: list
    per_bit_accuracy: list
    wall_clock_sec: float
    best_epoch: int
    checkpoint_path: str | None = None

    def to_csv(self) -> str:
        lines = ["epoch,train_mse,test_mse,per_bit_acc"]
        for i, (a, b, c) in enumerate(zip(self.train_mse, self.test_mse,
                                          self.per_bit_accuracy), start=1):
            lines.append(f"{i},{a:.8f},{b:.8f},{c:.6f}")
        return "\n".join(lines) + "\n"


def make_record(seed_index: int, cell: UnitCell) -> DatasetRecord:
    """Label one cell through the surrogate and feature pipeline."""
    vec = assemble_input(target_of_cell(cell))
    return DatasetRecord(seed_index, cell, vec, encode_bits(cell))


def generate_dataset(n: int, master_seed: int) -> list[DatasetRecord]:
    """n labeled records; record i depends only on (master_seed, i).

    Slots are drawn uniformly over the 8 tile ids with replacement, each
    record from its own seed stream hashed from (master_seed, i).
    """
    if n < 1:
        raise ValueError("dataset size must be >= 1")
    records = []
    for i in range(n):
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=master_seed, spawn_key=(i,)))
        cell = UnitCell(tuple(rng.integers(0, N_TILE_IDS, N_SLOTS)))
        records.append(make_record(i, cell))
    return records


def dataset_text(records, master_seed: int) -> str:
    """Line-oriented dataset: JSON header line, then one JSON record per line."""
    lines = [json.dumps({
        "format_version": DATASET_FORMAT_VERSION,
        "master_seed": master_seed,
        "surrogate_version": SURROGATE_VERSION,
    })]
    for rec in records:
        lines.append(json.dumps({
            "seed_index": rec.seed_index,
            "tiles": list(rec.cell.tiles),
            "input": [float(v) for v in rec.input],
            "label": "".join(str(int(b)) for b in rec.label),
        }))
    return "\n".join(lines) + "\n"


def save_dataset(path, records, master_seed: int):
    with open(path, "w", encoding="ascii") as fh:
        fh.write(dataset_text(records, master_seed))


def load_dataset(path) -> tuple[list[DatasetRecord], dict]:
    """Read a dataset file back; returns (records, header)."""
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError(f"dataset file {path} is empty")
    header = json.loads(lines[0])
    if header.get("format_version") != DATASET_FORMAT_VERSION:
        raise ValueError(f"unsupported dataset format version {header.get('format_version')}")
    records = []
    for ln, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        doc = json.loads(line)
        label = np.array([int(c) for c in doc["label"]], dtype=np.uint8)
        if label.shape != (N_BITS,):
            raise ValueError(f"line {ln}: label must be {N_BITS} bits")
        records.append(DatasetRecord(
            seed_index=int(doc["seed_index"]),
            cell=UnitCell(tuple(doc["tiles"])),
            input=np.array(doc["input"], dtype=float),
            label=label,
        ))
    return records, header


def split(records, ratio: float = 0.7, seed: int = 0):
    """Seeded shuffle into (train, test) of sizes floor(n*ratio) / remainder."""
    if not records:
        raise ValueError("cannot split an empty dataset")
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"split ratio must be in (0, 1), got {ratio}")
    order = np.random.default_rng(seed).permutation(len(records))
    cut = int(len(records) * ratio)
    train = [records[i] for i in order[:cut]]
    test = [records[i] for i in order[cut:]]
    return train, test


def _stack(records):
    X = np.stack([r.input for r in records])
    Y = np.stack([r.label for r in records]).astype(float)
    return X, Y


def train(train_records, test_records, config: TrainConfig | None = None):
    """Fit the designer network; returns (best network, per-epoch report)."""
    if config is None:
        config = TrainConfig()
    if not train_records or not test_records:
        raise ValueError("train and test sets must be non-empty")
    X, Y = _stack(train_records)
    X_test, Y_test = _stack(test_records)
    designer = MetasurfaceDesigner(
        hidden=config.hidden, dropout=config.dropout,
        learning_rate=config.learning_rate, epochs=config.epochs,
        batch_size=config.batch_size, seed=config.seed, patience=config.patience)
    designer.fit(X, Y, validation=(X_test, Y_test))
    report = TrainReport(
        train_mse=designer.train_mse_,
        test_mse=designer.val_mse_,
        per_bit_accuracy=designer.val_accuracy_,
        wall_clock_sec=designer.fit_seconds_,
        best_epoch=designer.best_epoch_,
    )
    return designer.network_, report


def evaluate(network: nn.Network, records) -> dict:
    """Inference-mode metrics over a record set.

    per_bit_accuracy averages bit matches after 0.5-thresholding;
    per_slot_accuracy requires all 3 bits of a tile slot correct;
    exact_cell_rate requires all 48 bits correct.
    """
    if not records:
        raise ValueError("cannot evaluate on an empty record set")
    X, Y = _stack(records)
    proba = network.forward(X)
    return prediction_metrics(proba, Y)


def prediction_metrics(proba, labels) -> dict:
    """Metrics for raw activations against 0/1 labels (threshold at 0.5)."""
    proba = np.atleast_2d(np.asarray(proba, dtype=float))
    labels = np.atleast_2d(np.asarray(labels, dtype=float))
    if proba.shape != labels.shape or proba.shape[1] != N_BITS:
        raise ValueError(f"prediction shape {proba.shape} incompatible with labels "
                         f"{labels.shape}")
    bits = proba >= 0.5
    truth = labels >= 0.5
    correct = bits == truth
    slots = correct.reshape(len(correct), N_SLOTS, 3).all(axis=2)
    return {
        "per_bit_accuracy": float(correct.mean()),
        "per_slot_accuracy": float(slots.mean()),
        "exact_cell_rate": float(correct.all(axis=1).mean()),
        "mse": nn.mse(proba, labels),
    }


def constant_predictor_accuracy(records) -> float:
    """Best per-bit accuracy any constant 48-bit output could score on records."""
    Y = np.stack([r.label for r in records]).astype(float)
    q = Y.mean(axis=0)
    return float(np.maximum(q, 1.0 - q).mean())


def design(network: nn.Network, target: DesignTarget) -> UnitCell:
    """Inverse-design a cell from a target via one network evaluation."""
    proba = network.forward(assemble_input(target))
    return decode_bits(decode_soft(proba))


@dataclass(frozen=True)
class NotchMatch:
    requested_freq: float
    matched: bool
    achieved_freq: float | None


@dataclass(frozen=True)
class VerificationReport:
    """Per-notch frequency matches between a cell's spectrum and a target."""

    te: tuple[NotchMatch, ...]
    tm: tuple[NotchMatch, ...]
    tolerance_ghz: float

    @staticmethod
    def _fraction(matches):
        if not matches:
            return 1.0
        return sum(m.matched for m in matches) / len(matches)

    @property
    def te_fraction(self):
        return self._fraction(self.te)

    @property
    def tm_fraction(self):
        return self._fraction(self.tm)

    @property
    def overall_fraction(self):
        both = self.te + self.tm
        return self._fraction(both)

    def to_dict(self):
        def items(matches):
            return [{"requested_freq_ghz": m.requested_freq, "matched": m.matched,
                     "achieved_freq_ghz": m.achieved_freq} for m in matches]
        return {
            "tolerance_ghz": self.tolerance_ghz,
            "te": items(self.te),
            "tm": items(self.tm),
            "te_fraction": self.te_fraction,
            "tm_fraction": self.tm_fraction,
            "overall_fraction": self.overall_fraction,
        }


def verify_design(cell: UnitCell, target: DesignTarget,
                  tol_f: float = DEFAULT_MATCH_TOL_GHZ) -> VerificationReport:
    """Forward-simulate a cell and check each requested notch frequency.

    A requested notch matches when the cell's spectrum contains an extracted
    notch (hence at least 10 dB deep) within tol_f of the requested frequency.
    """
    per_pol = {}
    for pol in (Polarization.TE, Polarization.TM):
        achieved = extract_notches(reflection_spectrum(cell, pol))
        matches = []
        for want in target.features(pol):
            best = None
            for got in achieved:
                gap = abs(got.frequency - want.frequency)
                if best is None or gap < abs(best - want.frequency):
                    best = got.frequency
            ok = best is not None and abs(best - want.frequency) <= tol_f
            matches.append(NotchMatch(want.frequency, ok, best))
        per_pol[pol] = tuple(matches)
    return VerificationReport(te=per_pol[Polarization.TE], tm=per_pol[Polarization.TM],
                              tolerance_ghz=tol_f)


def design_latency(network: nn.Network, target: DesignTarget, calls: int = 100) -> float:
    """Median wall-clock seconds per design() call."""
    times = []
    for _ in range(calls):
        t0 = time.perf_counter()
        design(network, target)
        times.append(time.perf_counter() - t0)
    return float(np.median(times))

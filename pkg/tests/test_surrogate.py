import numpy as np
import pytest

from metacell.geometry import UnitCell
from metacell.surrogate import (
    FLOOR_DB,
    N_SAMPLES,
    NotchParams,
    Polarization,
    ReflectionSpectrum,
    frequency_grid,
    notch_params,
    reflection_spectrum,
    spectra_csv,
)


class TestFrequencyGrid:
    def test_covers_4_to_45(self):
        grid = frequency_grid()
        assert len(grid) == 821
        assert grid[0] == 4.0
        assert grid[-1] == pytest.approx(45.0)
        assert np.allclose(np.diff(grid), 0.05)


class TestNotchParams:
    def test_uniform_cell(self):
        # 16 slots of one id: mean row 1.5 cancels the shift, depth clamps at -40
        (notch,) = notch_params(UnitCell.filled(0), Polarization.TE)
        assert notch.center == pytest.approx(6.0)
        assert notch.depth == pytest.approx(-40.0)
        assert notch.halfwidth == pytest.approx(0.95)

    def test_single_corner_tile(self):
        cell = UnitCell((7,) + (0,) * 15)
        notches = notch_params(cell, Polarization.TE)
        assert len(notches) == 2
        lone = notches[1]
        assert lone.center == pytest.approx(41.0 + 0.5 * (0 - 1.5))
        assert lone.depth == pytest.approx(-9.0)
        assert lone.halfwidth == pytest.approx(0.2)

    def test_transpose_swaps_polarizations(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            cell = UnitCell.random(rng)
            assert notch_params(cell, Polarization.TE) == \
                notch_params(cell.transpose(), Polarization.TM)

    def test_one_entry_per_distinct_id(self):
        cell = UnitCell((0, 1, 2, 3) * 4)
        assert len(notch_params(cell, Polarization.TE)) == 4

    def test_validation(self):
        with pytest.raises(ValueError):
            NotchParams(center=50.0, depth=-20.0, halfwidth=0.2)
        with pytest.raises(ValueError):
            NotchParams(center=10.0, depth=1.0, halfwidth=0.2)
        with pytest.raises(ValueError):
            NotchParams(center=10.0, depth=-20.0, halfwidth=0.0)


class TestReflectionSpectrum:
    def test_uniform_cell_minimum(self):
        spec = reflection_spectrum(UnitCell.filled(0), Polarization.TE)
        i = spec.samples.argmin()
        assert spec.frequencies()[i] == pytest.approx(6.0)
        assert spec.samples[i] == pytest.approx(-40.0, abs=0.5)

    def test_always_some_attenuation(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            spec = reflection_spectrum(UnitCell.random(rng), Polarization.TM)
            assert spec.samples.min() < 0.0

    def test_sample_range(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            cell = UnitCell.random(rng)
            for pol in Polarization:
                samples = reflection_spectrum(cell, pol).samples
                assert samples.max() <= 0.0
                assert samples.min() >= FLOOR_DB

    def test_isolated_center_depth(self):
        # id 0 (center 6) and id 7 at one slot: notches 35 GHz apart, far
        # beyond 10 halfwidths, so sampled depth tracks the notch depth
        cell = UnitCell((7, 7, 7, 7) + (0,) * 12)
        notches = notch_params(cell, Polarization.TE)
        spec = reflection_spectrum(cell, Polarization.TE)
        freqs = spec.frequencies()
        for notch in notches:
            i = np.abs(freqs - notch.center).argmin()
            assert spec.samples[i] == pytest.approx(max(notch.depth, FLOOR_DB), abs=0.5)

    def test_transpose_duality(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            cell = UnitCell.random(rng)
            te = reflection_spectrum(cell, Polarization.TE)
            tm_t = reflection_spectrum(cell.transpose(), Polarization.TM)
            assert np.array_equal(te.samples, tm_t.samples)

    def test_same_id_slot_permutation_invariance(self):
        rng = np.random.default_rng(4)
        checked = 0
        while checked < 20:
            cell = UnitCell.random(rng)
            tiles = list(cell.tiles)
            dupes = [i for i in range(16) if tiles.count(tiles[i]) > 1]
            if len(dupes) < 2:
                continue
            i, j = dupes[0], next(k for k in dupes[1:] if tiles[k] == tiles[dupes[0]])
            tiles[i], tiles[j] = tiles[j], tiles[i]
            swapped = UnitCell(tuple(tiles))
            for pol in Polarization:
                assert np.array_equal(reflection_spectrum(cell, pol).samples,
                                      reflection_spectrum(swapped, pol).samples)
            checked += 1

    def test_multiplicity_deepens_and_widens(self):
        # one slot of id 3 vs two slots: deeper pre-clamp depth, wider halfwidth
        one = notch_params(UnitCell((3,) + (0,) * 15), Polarization.TE)
        two = notch_params(UnitCell((3, 3) + (0,) * 14), Polarization.TE)
        n1 = next(n for n in one if abs(n.center - 21) < 2)
        n2 = next(n for n in two if abs(n.center - 21) < 2)
        assert n2.depth < n1.depth
        assert n2.halfwidth > n1.halfwidth

    def test_validation(self):
        with pytest.raises(ValueError):
            ReflectionSpectrum(Polarization.TE, np.zeros(100))
        with pytest.raises(ValueError):
            ReflectionSpectrum(Polarization.TE, np.full(N_SAMPLES, 1.0))


class TestSpectraCsv:
    def test_format(self):
        cell = UnitCell.filled(0)
        te = reflection_spectrum(cell, Polarization.TE)
        tm = reflection_spectrum(cell, Polarization.TM)
        lines = spectra_csv(te, tm).splitlines()
        assert lines[0] == "freq_ghz,te_db,tm_db"
        assert len(lines) == 1 + N_SAMPLES
        assert lines[1].startswith("4.000000,")
        assert lines[-1].startswith("45.000000,")
        for row in (lines[1], lines[41], lines[-1]):
            parts = row.split(",")
            assert len(parts) == 3
            for part in parts:
                assert len(part.split(".")[1]) == 6

    def test_polarization_order_enforced(self):
        cell = UnitCell.filled(0)
        te = reflection_spectrum(cell, Polarization.TE)
        with pytest.raises(ValueError):
            spectra_csv(te, te)

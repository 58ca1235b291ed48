import json

import numpy as np
import pytest

from src.core.event_bus import MAP_DEFECT, get_event_bus
from src.core.types import PreconditionError
from src.tmm import PlaneWaveContext, dispersion_map, power_coefficients, read_map, spectrum_at, write_map
from src.tmm.dispersion import CLAMP_VALUE, DispersionMap, sidecar_path_for
from tests.test_utils import tdbc_stack, tmp_settings  # noqa: F401


def test_single_point_map_matches_power_coefficients():
    stack = tdbc_stack(628.0)
    m = dispersion_map(stack, [2.0], [4.0])
    R, _, _ = power_coefficients(stack, PlaneWaveContext(E=2.0, kx=4.0))
    assert m.shape == (1, 1)
    assert m.values[0, 0] == pytest.approx(1.0 - R, abs=1e-14)
    assert m.defects == []
    assert m.metadata["polarization"] == "TE"


def test_map_values_bounded():
    m = dispersion_map(tdbc_stack(628.0), np.linspace(1.6, 2.6, 51), np.linspace(0, 12, 13))
    assert m.shape == (51, 13)
    assert np.all((m.values >= 0) & (m.values <= 1))


def test_evanescent_points_are_clamped_and_reported(tmp_settings):
    seen = []
    get_event_bus().subscribe(MAP_DEFECT, lambda ch, p: seen.append(p))
    # glass light line at 1.6 eV is 12.16 um^-1
    m = dispersion_map(tdbc_stack(628.0), [1.6, 2.4], [0.0, 13.0])
    assert m.values[0, 1] == CLAMP_VALUE
    assert m.values[1, 1] > 0
    assert len(m.defects) == 1
    assert m.defects[0]["E"] == 1.6 and m.defects[0]["kx"] == 13.0
    assert m.defects[0]["reason"] == "evanescent incidence"
    assert seen and seen[0]["count"] == 1


def test_map_independent_of_workers():
    stack = tdbc_stack(628.0)
    E = np.linspace(1.6, 2.6, 130)
    kx = np.linspace(0, 10, 6)
    serial = dispersion_map(stack, E, kx, workers=1, chunk_rows=16)
    pooled = dispersion_map(stack, E, kx, workers=4, chunk_rows=16)
    assert np.array_equal(serial.values, pooled.values)


def test_grid_validation():
    stack = tdbc_stack(628.0)
    with pytest.raises(PreconditionError):
        dispersion_map(stack, [], [0.0])
    with pytest.raises(PreconditionError):
        dispersion_map(stack, [2.0, 1.9], [0.0])
    with pytest.raises(PreconditionError):
        dispersion_map(stack, [2.0], [0.0, np.nan])


def test_map_shape_checked():
    with pytest.raises(PreconditionError, match="shape"):
        DispersionMap([1.0, 2.0], [0.0], np.zeros((3, 1)))


def test_spectrum_at_is_map_column():
    stack = tdbc_stack(628.0)
    E = np.linspace(1.7, 2.5, 81)
    s = spectrum_at(stack, E, kx=5.0)
    m = dispersion_map(stack, E, [5.0])
    assert np.array_equal(s.values, m.column(0))
    assert s.kx == 5.0 and s.provenance == "simulated" and s.quantity_label == "1-R"


def test_write_read_round_trip(tmp_path):
    m = dispersion_map(tdbc_stack(628.0), np.linspace(1.6, 2.6, 21), [0.0, 3.3, 13.0])
    csv = write_map(m, tmp_path / "map.csv", metadata={"name": "demo"})
    sidecar = json.loads(sidecar_path_for(csv).read_text())
    assert sidecar["quantity_label"] == "1-R"
    assert sidecar["shape"] == [21, 3]
    assert sidecar["name"] == "demo"

    back = read_map(csv)
    assert np.array_equal(back.energies, m.energies)
    assert np.array_equal(back.momenta, m.momenta)
    assert np.array_equal(back.values, m.values)
    assert len(back.defects) == len(m.defects)
    assert back.metadata["polarization"] == "TE"


def test_read_map_errors(tmp_path):
    with pytest.raises(PreconditionError, match="not found"):
        read_map(tmp_path / "missing.csv")

    bad = tmp_path / "bad.csv"
    bad.write_text("energy_ev,0.0,1.0\n1.6,0.1,0.2\n1.7,0.3,oops\n")
    with pytest.raises(PreconditionError):
        read_map(bad)

    ok = tmp_path / "ok.csv"
    ok.write_text("energy_ev,0.0\n1.6,0.1\n")
    (tmp_path / "ok.json").write_text("{\n  \"quantity_label\": \n")
    with pytest.raises(PreconditionError, match=r"ok\.json:\d+"):
        read_map(ok)


def test_to_frame_layout():
    m = DispersionMap([1.6, 1.7], [0.0, 1.0, 2.0], np.full((2, 3), 0.5))
    df = m.to_frame()
    assert df.index.name == "energy_ev"
    assert list(df.columns) == [0.0, 1.0, 2.0]

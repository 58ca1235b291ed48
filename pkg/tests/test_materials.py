import numpy as np
import pytest

from src.core.types import MaterialRangeError, PreconditionError
from src.materials import (
    Constant,
    Drude,
    DrudeParams,
    Lorentz,
    LorentzParams,
    Tabulated,
    TabulatedOptics,
    drude_permittivity,
    from_spec,
    load_tabulated_csv,
    lorentz_permittivity,
    refractive_index,
    silver_default,
    tabulated_index,
)

TDBC = LorentzParams(n0=1.5, f=0.037, Ex=2.1, gamma=0.034)


def test_lorentz_at_resonance():
    eps = lorentz_permittivity(2.1, TDBC)
    assert eps.real == pytest.approx(2.25, abs=1e-12)
    assert eps.imag == pytest.approx(0.037 / (0.034 * 2.1), rel=1e-12)
    assert eps.imag == pytest.approx(0.51821, abs=1e-5)


def test_lorentz_without_oscillator_is_background():
    p = LorentzParams(n0=1.5, f=0.0, Ex=2.1, gamma=0.034)
    for E in (0.5, 2.1, 3.7):
        assert lorentz_permittivity(E, p) == 2.25


def test_lorentz_static_limit():
    eps = lorentz_permittivity(1e-9, TDBC)
    assert eps.real == pytest.approx(2.25839, abs=1e-5)
    assert abs(eps.imag) < 1e-9


def test_lorentz_resonant_term_has_no_real_part_at_ex():
    eps = lorentz_permittivity(TDBC.Ex, TDBC)
    assert eps.real - TDBC.n0 ** 2 == 0.0


def test_drude_default_silver_at_2p1():
    eps = drude_permittivity(2.1, DrudeParams(5.0, 9.0, 0.07))
    assert eps.real == pytest.approx(-13.347, abs=1e-3)
    assert eps.imag == pytest.approx(0.6116, abs=1e-3)


def test_drude_lossless_zero_crossing():
    p = DrudeParams(eps_inf=5.0, Ep=9.0, Gamma=0.0)
    E0 = 9.0 / np.sqrt(5.0)
    assert drude_permittivity(E0, p).real == pytest.approx(0.0, abs=1e-12)


def test_drude_high_energy_limit():
    eps = drude_permittivity(1e6, DrudeParams())
    assert eps.real == pytest.approx(5.0, abs=1e-6)


def test_refractive_index_branch():
    assert refractive_index(4.0) == pytest.approx(2.0)
    n = refractive_index(-1.0 + 0j)
    assert n.real == pytest.approx(0.0, abs=1e-15)
    assert n.imag == pytest.approx(1.0)
    n = refractive_index(2.25 + 0.51821j)
    assert n.real == pytest.approx(1.50987, abs=1e-4)
    assert n.imag == pytest.approx(0.17160, abs=1e-4)


def test_refractive_index_round_trip_upper_half_plane():
    rng = np.random.default_rng(7)
    n = rng.uniform(0.01, 5, 200) + 1j * rng.uniform(0, 5, 200)
    back = refractive_index(n ** 2)
    assert np.allclose(back, n, rtol=1e-12, atol=0)


def test_passivity_random_parameters():
    rng = np.random.default_rng(1)
    E = rng.uniform(0.2, 5.0, 300)
    for _ in range(20):
        lor = Lorentz(LorentzParams(n0=rng.uniform(1, 2.5), f=rng.uniform(0, 0.2),
                                    Ex=rng.uniform(1, 3), gamma=rng.uniform(0.001, 0.2)))
        dru = Drude(DrudeParams(eps_inf=rng.uniform(1, 8), Ep=rng.uniform(1, 12), Gamma=rng.uniform(0, 0.3)))
        for model in (lor, dru):
            assert np.all(model.permittivity(E).imag >= 0)
            assert np.all(model.index(E).imag >= 0)


def test_vectorised_evaluation_matches_scalar():
    E = np.linspace(1.6, 2.6, 11)
    arr = silver_default().permittivity(E)
    assert arr.shape == E.shape
    assert arr[3] == pytest.approx(silver_default().permittivity(float(E[3])), rel=1e-14)


def test_nonpositive_energy_rejected():
    with pytest.raises(PreconditionError):
        lorentz_permittivity(0.0, TDBC)
    with pytest.raises(PreconditionError):
        Constant(1.5).index(np.array([1.0, -1.0]))


def test_parameter_validation():
    with pytest.raises(PreconditionError):
        LorentzParams(n0=0.9)
    with pytest.raises(PreconditionError):
        LorentzParams(gamma=0.0)
    with pytest.raises(PreconditionError):
        DrudeParams(Ep=-1.0)
    with pytest.raises(PreconditionError):
        Constant(0.5)


TABLE = TabulatedOptics(((1.0, 0.2, 3.0), (2.0, 0.1, 4.0), (3.0, 0.3, 5.0)))


def test_tabulated_grid_point_and_midpoint():
    assert tabulated_index(2.0, TABLE) == pytest.approx(0.1 + 4.0j)
    assert tabulated_index(1.5, TABLE) == pytest.approx(0.15 + 3.5j)


def test_tabulated_out_of_range_names_interval():
    with pytest.raises(MaterialRangeError) as exc:
        tabulated_index(0.5, TABLE)
    assert "[1, 3]" in str(exc.value)


def test_tabulated_validation():
    with pytest.raises(PreconditionError):
        TabulatedOptics(((1.0, 1.0, 0.0), (1.0, 1.0, 0.0)))
    with pytest.raises(PreconditionError):
        TabulatedOptics(((1.0, 1.0, 0.0), (2.0, 1.0, -0.1)))


def test_tabulated_model_permittivity_is_index_squared():
    model = Tabulated(TABLE)
    n = model.index(2.5)
    assert model.permittivity(2.5) == pytest.approx(n * n)
    assert not model.is_lossless()


def test_load_tabulated_csv(tmp_path):
    p = tmp_path / "ag.csv"
    p.write_text("energy_ev,n,k\n1.5,0.05,4.5\n2.0,0.05,3.5\n2.5,0.06,2.9\n")
    table = load_tabulated_csv(p)
    assert table.energy_range == (1.5, 2.5)
    assert tabulated_index(2.25, table) == pytest.approx(0.055 + 3.2j)


def test_load_tabulated_csv_errors(tmp_path):
    bad_header = tmp_path / "h.csv"
    bad_header.write_text("E,n,k\n1,1,0\n2,1,0\n")
    with pytest.raises(PreconditionError, match="energy_ev"):
        load_tabulated_csv(bad_header)

    bad_value = tmp_path / "v.csv"
    bad_value.write_text("energy_ev,n,k\n1,1,0\n2,oops,0\n")
    with pytest.raises(PreconditionError, match="line 3"):
        load_tabulated_csv(bad_value)


def test_from_spec_variants(tmp_path):
    assert from_spec({"kind": "constant", "n": 1.5}) == Constant(1.5)
    lor = from_spec({"kind": "lorentz", "f": 0.05})
    assert isinstance(lor, Lorentz) and lor.params.f == 0.05 and lor.params.Ex == 2.1
    assert from_spec({"kind": "drude"}) == silver_default()

    p = tmp_path / "t.csv"
    p.write_text("energy_ev,n,k\n1,1.5,0\n3,1.5,0\n")
    tab = from_spec({"kind": "tabulated", "csv": str(p)})
    assert tab.is_lossless()
    with pytest.raises(PreconditionError):
        from_spec({"kind": "plasma"})

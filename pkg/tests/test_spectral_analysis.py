import numpy as np
import pytest

from src.analysis import (
    DipSet,
    Regime,
    Spectrum,
    classify_regime,
    column_spectrum,
    dipset_to_json,
    find_dips,
    measure_splitting,
    regime_to_json,
    shoulder_pair,
    trace_branches,
    transitions,
)
from src.analysis.regime import RegimeLabel
from src.analysis.spectrum import parabola_vertex
from src.core.types import NoAnticrossingError, PreconditionError
from src.tmm.dispersion import DispersionMap
from tests.test_utils import lorentzian, synthetic_map, two_level

PROM = 0.02


def _spectrum(values, E, label="1-R"):
    return Spectrum(energies=E, values=values, quantity_label=label)


# ---------------- dip extraction ----------------

def test_lorentzian_center_sub_grid():
    E = np.arange(1.9, 2.3, 0.002)
    s = _spectrum(lorentzian(E, 2.1013, 0.02, 0.6), E)
    dips = find_dips(s, min_prominence=PROM)
    assert len(dips) == 1
    assert dips[0].center == pytest.approx(2.1013, abs=0.002 / 10)
    assert dips[0].fwhm == pytest.approx(0.02, abs=0.002)
    assert dips[0].depth == pytest.approx(0.6, abs=0.01)


def test_parabola_vertex_exact_on_quadratic():
    x = np.array([1.99, 2.0, 2.013])
    y = 0.7 - 40.0 * (x - 2.0037) ** 2
    xv, yv = parabola_vertex(x, y)
    assert xv == pytest.approx(2.0037, abs=1e-12)
    assert yv == pytest.approx(0.7, abs=1e-12)


def test_quadratic_peak_on_nonuniform_grid():
    E = np.sort(np.concatenate([np.linspace(1.9, 2.2, 31), [2.0437 + 0.0031]]))
    s = _spectrum(0.8 - 50.0 * (E - 2.0437) ** 2, E, label="A")
    dips = find_dips(s, min_prominence=PROM)
    assert len(dips) == 1
    assert dips[0].center == pytest.approx(2.0437, abs=1e-10)
    assert dips[0].depth == pytest.approx(0.8, abs=1e-10)


def test_monotone_spectrum_has_no_dips():
    E = np.linspace(1.6, 2.6, 101)
    assert len(find_dips(_spectrum(np.linspace(0.1, 0.9, 101), E), min_prominence=PROM)) == 0
    assert len(find_dips(_spectrum(np.zeros(101), E), min_prominence=PROM)) == 0


def test_two_dips_sorted_by_energy():
    E = np.linspace(1.8, 2.4, 601)
    s = _spectrum(lorentzian(E, 2.2, 0.02, 0.5) + lorentzian(E, 2.0, 0.02, 0.3), E)
    dips = find_dips(s, min_prominence=PROM)
    assert dips.centers == pytest.approx([2.0, 2.2], abs=1e-3)
    assert dips[0].prominence < dips[1].prominence


def test_prominence_threshold_is_fraction_of_full_scale():
    E = np.linspace(1.8, 2.4, 601)
    s = _spectrum(lorentzian(E, 2.0, 0.02, 0.5) + lorentzian(E, 2.2, 0.02, 0.01), E)
    assert len(find_dips(s, min_prominence=0.02)) == 1
    assert len(find_dips(s, min_prominence=0.005)) == 2


def test_reflectance_features_are_minima():
    E = np.linspace(1.8, 2.4, 601)
    s = _spectrum(1.0 - lorentzian(E, 2.1, 0.03, 0.6), E, label="R")
    assert not s.features_are_maxima
    dips = find_dips(s, min_prominence=PROM)
    assert len(dips) == 1
    assert dips[0].center == pytest.approx(2.1, abs=1e-4)
    assert dips[0].depth == pytest.approx(0.4, abs=0.01)


def test_emission_counts_use_own_scale():
    E = np.linspace(1.8, 2.4, 601)
    s = Spectrum(E, 1000.0 + lorentzian(E, 2.05, 0.02, 5000.0), quantity_label="counts",
                 provenance="ingested")
    assert s.features_are_maxima
    assert s.full_scale == pytest.approx(np.ptp(s.values))
    assert find_dips(s, min_prominence=PROM).centers == pytest.approx([2.05], abs=1e-3)


def test_window_restricts_and_must_hold_points():
    E = np.linspace(1.8, 2.4, 601)
    s = _spectrum(lorentzian(E, 2.0, 0.02, 0.5) + lorentzian(E, 2.2, 0.02, 0.5), E)
    assert find_dips(s, min_prominence=PROM, window=(2.1, 2.3)).centers == pytest.approx([2.2], abs=1e-3)
    with pytest.raises(PreconditionError):
        find_dips(s, min_prominence=PROM, window=(3.0, 3.1))


def test_spectrum_validation():
    with pytest.raises(PreconditionError):
        Spectrum([1.0, 2.0], [0.1])
    with pytest.raises(PreconditionError):
        Spectrum([2.0, 1.0], [0.1, 0.2])
    with pytest.raises(PreconditionError):
        Spectrum([1.0, 2.0], [0.1, np.inf])
    with pytest.raises(PreconditionError):
        Spectrum([1.0, 2.0], [0.1, 0.2], provenance="guessed")


def test_dipset_helpers_and_json():
    E = np.linspace(1.8, 2.4, 601)
    dips = find_dips(_spectrum(lorentzian(E, 2.0, 0.02, 0.5) + lorentzian(E, 2.2, 0.02, 0.5), E),
                     min_prominence=PROM)
    lo, hi = dips.straddling(2.1)
    assert lo.center < 2.1 < hi.center
    assert dips.straddling(2.3) is None
    assert len(dips.within(1.9, 2.1)) == 1
    rec = dipset_to_json(dips, kx=3.0)
    assert rec["count"] == 2 and rec["kx_per_um"] == 3.0
    assert set(rec["dips"][0]) == {"center_ev", "depth", "prominence", "fwhm_ev"}
    assert len(DipSet()) == 0


# ---------------- regime labels ----------------

E_REGIME = np.linspace(1.8, 2.4, 601)


def test_flat_spectrum_is_indeterminate():
    label = classify_regime(_spectrum(np.full(E_REGIME.size, 0.2), E_REGIME), 2.1, min_prominence=PROM)
    assert label.regime is Regime.INDETERMINATE
    assert label.gap is None and label.n_dips == 0


def test_single_dip_is_coupled():
    s = _spectrum(lorentzian(E_REGIME, 2.11, 0.02, 0.5), E_REGIME)
    label = classify_regime(s, 2.1, min_prominence=PROM)
    assert label.regime is Regime.COUPLED
    assert label.centers == pytest.approx((2.11,), abs=1e-3)


def test_straddling_pair_is_decoupled_with_gap():
    s = _spectrum(lorentzian(E_REGIME, 2.04, 0.02, 0.5) + lorentzian(E_REGIME, 2.16, 0.02, 0.5), E_REGIME)
    label = classify_regime(s, 2.1, min_prominence=PROM)
    assert label.regime is Regime.DECOUPLED
    assert label.gap == pytest.approx(0.12, abs=1e-3)
    assert label.gap_mev == pytest.approx(120.0, abs=1.0)


def test_gap_above_cap_is_indeterminate():
    s = _spectrum(lorentzian(E_REGIME, 2.04, 0.02, 0.5) + lorentzian(E_REGIME, 2.16, 0.02, 0.5), E_REGIME)
    assert classify_regime(s, 2.1, min_prominence=PROM, max_gap=0.1).regime is Regime.INDETERMINATE
    assert classify_regime(s, 2.1, min_prominence=PROM, max_gap=0.0).regime is Regime.INDETERMINATE


def test_pair_on_one_side_is_indeterminate():
    s = _spectrum(lorentzian(E_REGIME, 2.0, 0.02, 0.5) + lorentzian(E_REGIME, 2.06, 0.02, 0.5), E_REGIME)
    assert classify_regime(s, 2.1, min_prominence=PROM).regime is Regime.INDETERMINATE


def _unresolved_doublet(split, width=0.05):
    return lorentzian(E_REGIME, 2.1 - split / 2, width, 0.5) + lorentzian(E_REGIME, 2.1 + split / 2, width, 0.5)


def test_unresolved_doublet_shows_curvature_lobes():
    s = _spectrum(_unresolved_doublet(0.026), E_REGIME)
    dips = find_dips(s, min_prominence=PROM)
    assert len(dips) == 1
    lo, hi = shoulder_pair(s, dips[0], 2.1)
    assert lo == pytest.approx(2.087, abs=2e-3)
    assert hi == pytest.approx(2.113, abs=2e-3)


def test_broad_single_dip_is_decoupled_when_enabled():
    s = _spectrum(_unresolved_doublet(0.026), E_REGIME)
    assert classify_regime(s, 2.1, min_prominence=PROM).regime is Regime.COUPLED

    label = classify_regime(s, 2.1, min_prominence=PROM, broad_fwhm=0.06)
    assert label.regime is Regime.DECOUPLED
    assert label.unresolved and label.n_dips == 1
    assert label.gap == pytest.approx(0.026, abs=3e-3)
    assert classify_regime(s, 2.1, min_prominence=PROM, broad_fwhm=0.08).regime is Regime.COUPLED


def test_broad_single_line_stays_coupled():
    s = _spectrum(lorentzian(E_REGIME, 2.1, 0.08, 0.5), E_REGIME)
    label = classify_regime(s, 2.1, min_prominence=PROM, broad_fwhm=0.06)
    assert label.regime is Regime.COUPLED
    assert not label.unresolved


def test_classify_requires_span():
    E = np.linspace(2.0, 2.2, 201)
    with pytest.raises(PreconditionError):
        classify_regime(_spectrum(np.zeros(E.size), E), 2.1, window=0.15)


def test_transitions_skip_indeterminate():
    c = RegimeLabel(Regime.COUPLED, 1)
    d = RegimeLabel(Regime.DECOUPLED, 2, gap=0.05)
    i = RegimeLabel(Regime.INDETERMINATE)
    flips = transitions([600, 650, 700, 750, 800], [c, c, i, d, d])
    assert flips == [(650.0, 750.0, Regime.COUPLED, Regime.DECOUPLED)]
    assert transitions([600, 700], [c, c]) == []


def test_regime_json():
    rec = regime_to_json(RegimeLabel(Regime.DECOUPLED, 2, gap=0.05, centers=(2.07, 2.12)), L_nm=700.0)
    assert rec == {"regime": "Decoupled", "n_dips": 2, "gap_meV": 50.0, "unresolved": False,
                   "dip_centers_ev": [2.07, 2.12], "dips": [], "L_nm": 700.0}


def test_regime_json_carries_dips():
    s = _spectrum(lorentzian(E_REGIME, 2.04, 0.02, 0.5) + lorentzian(E_REGIME, 2.16, 0.02, 0.5), E_REGIME)
    rec = regime_to_json(classify_regime(s, 2.1, min_prominence=PROM))
    assert [d["center_ev"] for d in rec["dips"]] == pytest.approx([2.04, 2.16], abs=1e-3)
    assert rec["dips"][0]["fwhm_ev"] == pytest.approx(0.02, abs=2e-3)


# ---------------- splitting and branch tracing ----------------

ENERGIES = np.arange(1.8, 2.4, 0.001)
MOMENTA = np.arange(0.0, 12.01, 0.25)


def test_splitting_of_synthetic_anticrossing():
    g = 0.064
    m = synthetic_map(two_level(g), ENERGIES, MOMENTA)
    split = measure_splitting(m, lambda k: 1.95 + 0.02 * k, 2.1, min_prominence=PROM)
    assert split.rabi == pytest.approx(2 * g, abs=2e-3)
    assert split.kx == pytest.approx(7.5, abs=0.25)


def test_splitting_needs_crossing():
    m = synthetic_map(two_level(0.064), ENERGIES, MOMENTA)
    with pytest.raises(PreconditionError):
        measure_splitting(m, lambda k: 1.5, 2.1, min_prominence=PROM)


@pytest.mark.parametrize("seed", [3, 11, 29])
def test_splitting_matches_twice_the_coupling(seed):
    rng = np.random.default_rng(seed)
    step = float(ENERGIES[1] - ENERGIES[0])
    for g in rng.uniform(0.01, 0.2, size=4):
        m = synthetic_map(two_level(g), ENERGIES, MOMENTA)
        split = measure_splitting(m, lambda k: 1.95 + 0.02 * k, 2.1, min_prominence=PROM)
        assert abs(split.rabi - 2 * g) <= step, f"g={g:.4f}"
        assert split.kx == pytest.approx(7.5, abs=0.25)


def test_separation_shrinking_to_range_edge_is_not_an_anticrossing():
    values = np.column_stack([
        lorentzian(ENERGIES, 1.92 + 0.02 * k, 0.01, 0.6) + lorentzian(ENERGIES, 2.35 - 0.005 * k, 0.01, 0.6)
        for k in MOMENTA
    ])
    m = DispersionMap(ENERGIES, MOMENTA, values)
    with pytest.raises(NoAnticrossingError, match="no minimum"):
        measure_splitting(m, lambda k: 1.95 + 0.02 * k, 2.1, min_prominence=PROM)


def test_single_dispersive_dip_has_no_anticrossing():
    values = np.column_stack([lorentzian(ENERGIES, 1.95 + 0.02 * k, 0.01, 0.6) for k in MOMENTA])
    m = DispersionMap(ENERGIES, MOMENTA, values)
    with pytest.raises(NoAnticrossingError):
        measure_splitting(m, lambda k: 1.95 + 0.02 * k, 2.1, min_prominence=PROM)


def test_trace_branches_follows_eigenvalues():
    m = synthetic_map(two_level(0.064), ENERGIES, MOMENTA)
    seeds = find_dips(column_spectrum(m, 0), min_prominence=PROM)
    branches = trace_branches(m, seeds, min_prominence=PROM)
    assert branches.labels == ["B1", "B2"]
    assert branches.terminated_at == {}
    expected = np.array([np.linalg.eigvalsh(
        [[1.95 + 0.02 * k, 0.064], [0.064, 2.1]]) for k in MOMENTA])
    assert np.allclose(branches.energies, expected, atol=2e-3)


def test_trace_branches_terminates_vanishing_branch():
    values = []
    for j, k in enumerate(MOMENTA):
        col = lorentzian(ENERGIES, 2.0, 0.01, 0.5)
        if k <= 5.0:
            col = col + lorentzian(ENERGIES, 2.2, 0.01, 0.5)
        values.append(col)
    m = DispersionMap(ENERGIES, MOMENTA, np.column_stack(values))
    seeds = find_dips(column_spectrum(m, 0), min_prominence=PROM)
    branches = trace_branches(m, seeds, min_prominence=PROM)
    assert branches.terminated_at == {"B2": 5.0}
    assert np.isnan(branches.branch("B2")[-1])
    assert not np.isnan(branches.branch("B1")).any()


def test_trace_branches_needs_seeds():
    m = synthetic_map(two_level(0.064), ENERGIES, MOMENTA)
    with pytest.raises(PreconditionError):
        trace_branches(m, DipSet())

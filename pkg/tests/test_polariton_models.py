import math

import numpy as np
import pytest

from src.core.types import PreconditionError
from src.polariton import (
    CoupledModel,
    ModeLadder,
    PolaritonBranches,
    Topology,
    build_hamiltonian,
    eigenbranches,
    empty_mode_energy,
    hopfield_weights,
    ladder_model,
    layer_phase_offset,
    mirror_phase_offset,
    nearest_symmetric_length,
    select_modes,
    symmetric_length,
)
from src.polariton.hamiltonian import decoupled_labels, entangled_labels
from src.tmm.stack import silver_cavity

SEMI_INFINITE_SILVER_DELTA = 0.7788
THIN_MIRROR_DELTA = 0.846


# ---------------- mode ladder ----------------

def test_ideal_mirror_mode_energy():
    assert empty_mode_energy(3, 628.0, 1.5) == pytest.approx(1.9743, abs=1e-4)


def test_mode_energy_dispersion():
    E0 = empty_mode_energy(3, 628.0, 1.5)
    kx = 6.0
    expected = math.sqrt(E0 ** 2 + (197.327 / 1.5 * kx * 1e-3) ** 2)
    assert empty_mode_energy(3, 628.0, 1.5, kx) == pytest.approx(expected, rel=1e-12)
    arr = empty_mode_energy(3, 628.0, 1.5, np.array([0.0, kx]))
    assert arr.shape == (2,)
    assert arr[0] == pytest.approx(E0)


def test_semi_infinite_silver_phase_offset():
    delta = mirror_phase_offset(thickness_nm=500.0)
    assert delta == pytest.approx(SEMI_INFINITE_SILVER_DELTA, abs=1e-3)


def test_thin_mirror_phase_offset_is_moderate():
    delta = mirror_phase_offset()
    assert 0.5 < delta < 1.1


def test_phase_offset_moves_mode_three_below_exciton():
    E3 = empty_mode_energy(3, 628.0, 1.5, phase_offset=SEMI_INFINITE_SILVER_DELTA)
    E4 = empty_mode_energy(4, 628.0, 1.5, phase_offset=SEMI_INFINITE_SILVER_DELTA)
    assert E3 == pytest.approx(1.811, abs=2e-3)
    assert E4 == pytest.approx(2.469, abs=2e-3)
    # mode 3 meets Ex = 2.1 eV near 8.08 um^-1
    kx = np.linspace(7.9, 8.3, 401)
    E = empty_mode_energy(3, 628.0, 1.5, kx, SEMI_INFINITE_SILVER_DELTA)
    assert kx[np.argmin(np.abs(E - 2.1))] == pytest.approx(8.08, abs=0.01)


@pytest.mark.parametrize("m,expected", [(2, 443.0), (3, 640.0), (4, 837.0)])
def test_symmetric_length(m, expected):
    L = symmetric_length(m, 2.1, 1.5, SEMI_INFINITE_SILVER_DELTA)
    assert L == pytest.approx(expected, abs=1.0)
    lo = empty_mode_energy(m, L, 1.5, phase_offset=SEMI_INFINITE_SILVER_DELTA)
    hi = empty_mode_energy(m + 1, L, 1.5, phase_offset=SEMI_INFINITE_SILVER_DELTA)
    assert (lo + hi) / 2 == pytest.approx(2.1, abs=1e-12)


@pytest.mark.parametrize("L,order", [(400.0, 2), (700.0, 3), (730.0, 3), (740.0, 4), (1600.0, 8), (50.0, 1)])
def test_nearest_symmetric_length(L, order):
    m, L_sym = nearest_symmetric_length(L, 2.1, 1.5, THIN_MIRROR_DELTA)
    assert m == order
    assert L_sym == pytest.approx(symmetric_length(order, 2.1, 1.5, THIN_MIRROR_DELTA))
    # neighbouring symmetric lengths are never closer
    if order > 1:
        assert abs(L - L_sym) <= abs(L - symmetric_length(order - 1, 2.1, 1.5, THIN_MIRROR_DELTA))
    assert abs(L - L_sym) <= abs(L - symmetric_length(order + 1, 2.1, 1.5, THIN_MIRROR_DELTA))


def test_layer_phase_offset_averages_both_mirrors():
    stack = silver_cavity(628.0)
    delta = layer_phase_offset(stack, 1, 1.5, 2.1)
    air_backed = mirror_phase_offset(backing=1.0)
    glass_backed = mirror_phase_offset(backing=1.5)
    assert delta == pytest.approx(0.5 * (air_backed + glass_backed), abs=1e-12)
    assert delta == pytest.approx(THIN_MIRROR_DELTA, abs=0.02)
    with pytest.raises(PreconditionError):
        layer_phase_offset(stack, 3, 1.5, 2.1)


def test_select_modes_window():
    ladder = select_modes(628.0, 1.5, 2.1, window=1.0)
    assert ladder.orders == (2, 3, 4)
    assert np.all(np.abs(ladder.energies() - 2.1) <= 1.0)


def test_mode_validation():
    with pytest.raises(PreconditionError):
        empty_mode_energy(0, 628.0, 1.5)
    with pytest.raises(PreconditionError):
        empty_mode_energy(1, -5.0, 1.5)
    with pytest.raises(PreconditionError):
        ModeLadder(L=628.0, n0=1.5, orders=(3, 2))


# ---------------- Hamiltonians ----------------

def _model(topology, energies=(1.8, 2.0, 2.35), g=0.064):
    return CoupledModel(mode_energies=energies, Ex=2.1, g=g, topology=topology, orders=(3, 4, 5))


def test_hamiltonian_shapes_and_symmetry():
    H_ent = build_hamiltonian(_model("entangled"))
    H_dec = build_hamiltonian(_model("decoupled"))
    assert H_ent.shape == (4, 4)
    assert H_dec.shape == (6, 6)
    assert np.array_equal(H_ent, H_ent.T)
    assert np.array_equal(H_dec, H_dec.T)
    assert np.trace(H_ent) == pytest.approx(1.8 + 2.0 + 2.35 + 2.1)
    assert np.trace(H_dec) == pytest.approx(1.8 + 2.0 + 2.35 + 3 * 2.1)


def test_entangled_modes_couple_only_through_exciton():
    H = build_hamiltonian(_model("entangled"))
    off = H[:3, :3] - np.diag(np.diag(H[:3, :3]))
    assert not off.any()
    assert np.all(H[:3, 3] == 0.064)


def test_decoupled_matches_independent_two_level_systems():
    model = _model("decoupled")
    expected = []
    for e in model.mode_energies:
        mid, half = (e + 2.1) / 2, (e - 2.1) / 2
        expected += [mid - math.hypot(half, 0.064), mid + math.hypot(half, 0.064)]
    vals = np.linalg.eigvalsh(build_hamiltonian(model))
    assert np.allclose(vals, sorted(expected), atol=1e-12)


@pytest.mark.parametrize("topology", ["entangled", "decoupled"])
def test_eigenvalues_match_characteristic_polynomial(topology):
    H = build_hamiltonian(_model(topology))
    roots = np.sort(np.real(np.roots(np.poly(H))))
    assert np.allclose(roots, np.linalg.eigvalsh(H), atol=1e-6)


def test_entangled_eigenvalues_interlace():
    rng = np.random.default_rng(3)
    for _ in range(50):
        energies = tuple(np.sort(rng.uniform(1.5, 2.7, 4)))
        model = CoupledModel(energies, Ex=2.1, g=float(rng.uniform(0.01, 0.1)))
        vals = np.linalg.eigvalsh(build_hamiltonian(model))
        modes = np.array(energies)
        # exactly one eigenvalue between consecutive bare modes
        assert np.all(vals[:-1] < modes)
        assert np.all(modes < vals[1:])


def test_zero_coupling_returns_bare_energies():
    vals = np.linalg.eigvalsh(build_hamiltonian(_model("entangled", g=0.0)))
    assert np.allclose(vals, [1.8, 2.0, 2.1, 2.35])


def test_entangled_labels():
    assert entangled_labels((2, 3, 4), (1.316, 1.974, 2.632), 2.1) == ["LP_2", "LP_3", "MP_3-4", "UP_4"]
    assert entangled_labels((1, 2), (1.5, 1.8), 2.1) == ["LP_1", "LP_2", "UP_2"]
    assert entangled_labels((1, 2), (2.3, 2.6), 2.1) == ["LP_1", "UP_1", "UP_2"]


def test_decoupled_labels_follow_eigenvalue_order():
    model = CoupledModel((1.5, 2.7), Ex=2.1, g=0.02, topology="decoupled", orders=(2, 3))
    # near-resonant UP_2 sits above the far-detuned LP_3
    assert decoupled_labels(model) == ["LP_2", "LP_3", "UP_2", "UP_3"]


def test_coupled_model_validation():
    with pytest.raises(PreconditionError):
        CoupledModel((), Ex=2.1, g=0.05)
    with pytest.raises(PreconditionError):
        CoupledModel((2.0,), Ex=2.1, g=-0.01)
    with pytest.raises(PreconditionError):
        CoupledModel((2.0, 2.2), Ex=2.1, g=0.05, orders=(1,))
    with pytest.raises(PreconditionError):
        Topology.parse("braided")


def test_eigenbranches_over_ladder():
    ladder = ModeLadder(L=628.0, n0=1.5, orders=(3, 4), phase_offset=SEMI_INFINITE_SILVER_DELTA)
    kx = np.linspace(0, 12, 25)
    branches = eigenbranches(ladder_model(ladder, 2.1, 0.064, "entangled"), kx)
    assert branches.labels == ["LP_3", "MP_3-4", "UP_4"]
    assert branches.energies.shape == (25, 3)
    assert np.all(np.diff(branches.energies, axis=1) > 0)
    # the mid branch stays between its two bare modes
    mp = branches.branch("MP_3-4")
    assert np.all(mp < empty_mode_energy(4, 628.0, 1.5, kx, SEMI_INFINITE_SILVER_DELTA))


def test_eigenbranches_decoupled_labels_fixed_at_first_kx():
    ladder = ModeLadder(L=628.0, n0=1.5, orders=(3, 4), phase_offset=SEMI_INFINITE_SILVER_DELTA)
    branches = eigenbranches(ladder_model(ladder, 2.1, 0.064, Topology.DECOUPLED), [0.0, 6.0])
    assert branches.labels == ["LP_3", "LP_4", "UP_3", "UP_4"]
    assert branches.energies.shape == (2, 4)


def test_branches_table(tmp_path):
    b = PolaritonBranches(kx=[0.0, 1.0], energies=[[1.9, 2.2], [1.91, 2.21]], labels=["LP_1", "UP_1"])
    df = b.to_frame()
    assert list(df.columns) == ["kx", "LP_1", "UP_1"]
    path = b.write_csv(tmp_path / "branches.csv")
    assert path.read_text().splitlines()[0] == "kx,LP_1,UP_1"
    with pytest.raises(PreconditionError):
        PolaritonBranches(kx=[0.0], energies=[[1.9, 2.2]], labels=["LP_1"])


def test_hopfield_weights_resonant_two_level():
    hw = hopfield_weights(CoupledModel((2.1,), Ex=2.1, g=0.05))
    assert hw.components == ["mode_1", "exciton"]
    assert np.allclose(hw.weights, 0.5)
    assert hw.energies == pytest.approx([2.05, 2.15])


def test_hopfield_mid_branch_shares_photon_equally():
    hw = hopfield_weights(CoupledModel((2.0, 2.2), Ex=2.1, g=0.06))
    assert np.allclose(hw.weights.sum(axis=1), 1.0)
    assert hw.energies[1] == pytest.approx(2.1, abs=1e-12)
    assert hw.of("mode_1")[1] == pytest.approx(hw.of("mode_2")[1], abs=1e-12)


def test_hopfield_decoupled_components():
    hw = hopfield_weights(_model("decoupled"))
    assert hw.components == ["mode_3", "exciton_3", "mode_4", "exciton_4", "mode_5", "exciton_5"]
    assert np.allclose(hw.weights.sum(axis=1), 1.0)

"""Unit conventions: energies in eV, lengths in nm, in-plane momenta in um^-1 at API boundaries."""
from __future__ import annotations

HC_EV_NM = 1239.8420
HBAR_C_EV_NM = 197.3270

HBAR_EV_S = 6.582119569e-16
C_NM_PER_S = 2.99792458e17

NM_PER_UM = 1000.0


def per_um_to_per_nm(kx):
    return kx / NM_PER_UM


def vacuum_wavenumber(energy):
    """k0 = E / (hbar c), in nm^-1."""
    return energy / HBAR_C_EV_NM

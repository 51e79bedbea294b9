import pytest

from spdckit.compensation import two_crystal_stack
from spdckit.materials import default_library
from spdckit.phasematch import PhaseMatchConfig, solve_signal_idler


@pytest.fixture(scope="session")
def library():
    return default_library()


@pytest.fixture(scope="session")
def bbo(library):
    return library.get("BBO")


@pytest.fixture(scope="session")
def yvo4(library):
    return library.get("YVO4")


@pytest.fixture(scope="session")
def reference_config(bbo):
    """Bundled scenario: 15.76 mm crystals cut at 29.0 deg, 403 nm / 0.5 nm pump."""
    return PhaseMatchConfig(bbo, theta_p_deg=29.0, length_mm=15.76,
                            pump_nm=403.0, pump_fwhm_nm=0.5)


@pytest.fixture(scope="session")
def reference_pair(reference_config):
    return solve_signal_idler(reference_config)


@pytest.fixture(scope="session")
def reference_stack(reference_config, yvo4):
    return two_crystal_stack(reference_config, yvo4)

import numpy as np
import pytest

from spdckit.errors import ConfigError, WavelengthRangeError
from spdckit.materials import (ORDINARY, analytic_index_derivative,
                               default_library, extraordinary_at, group_index,
                               index_derivative, lateral_displacement,
                               load_library, refractive_index, walkoff_angle)

# golden values frozen from the shipped materials file; re-derive on any
# coefficient change
GOLDEN_N_O_BBO_403 = 1.6923199169484084
GOLDEN_N_G_YVO4_O_403 = 2.5020854294357973
GOLDEN_WALKOFF_RAD = 0.06302542434594849
GOLDEN_DISPLACEMENT_MM = 0.9945979519200299


def sample_wavelengths(material, n=21):
    lo, hi = material.ordinary.range_nm
    return np.linspace(lo + 1.0, hi - 1.0, n)


def test_theta_zero_reduces_to_ordinary(bbo, yvo4):
    for mat in (bbo, yvo4):
        for lam in sample_wavelengths(mat):
            assert refractive_index(mat, extraordinary_at(0.0), lam) == pytest.approx(
                refractive_index(mat, ORDINARY, lam), abs=1e-15)


def test_theta_ninety_reduces_to_principal_extraordinary(bbo, yvo4):
    for mat in (bbo, yvo4):
        for lam in sample_wavelengths(mat):
            principal = mat.extraordinary.index(lam)
            assert refractive_index(mat, extraordinary_at(90.0), lam) == pytest.approx(
                principal, abs=1e-15)


def test_ordinary_index_golden_bbo_403(bbo):
    n = refractive_index(bbo, ORDINARY, 403.0)
    assert 1.68 <= n <= 1.70
    assert n == pytest.approx(GOLDEN_N_O_BBO_403, abs=1e-12)


def test_angle_index_monotonic_between_principals(bbo, yvo4):
    thetas = np.linspace(0.0, 90.0, 31)
    for mat, lam in ((bbo, 800.0), (yvo4, 800.0)):
        values = np.array([refractive_index(mat, extraordinary_at(t), lam)
                           for t in thetas])
        n_o = refractive_index(mat, ORDINARY, lam)
        n_e = mat.extraordinary.index(lam)
        lo, hi = min(n_o, n_e), max(n_o, n_e)
        assert np.all(values >= lo - 1e-12) and np.all(values <= hi + 1e-12)
        diffs = np.diff(values)
        assert np.all(diffs <= 1e-12) or np.all(diffs >= -1e-12)  # monotone


def test_uniaxial_sign_invariant(bbo, yvo4):
    for lam in sample_wavelengths(bbo):
        assert bbo.extraordinary.index(lam) < bbo.ordinary.index(lam)
    for lam in sample_wavelengths(yvo4):
        assert yvo4.extraordinary.index(lam) > yvo4.ordinary.index(lam)


def test_finite_difference_matches_analytic(bbo, yvo4):
    cases = [(bbo, ORDINARY, 800.0), (bbo, extraordinary_at(29.0), 800.0),
             (bbo, ORDINARY, 403.0), (yvo4, ORDINARY, 403.0),
             (yvo4, extraordinary_at(90.0), 765.0)]
    for mat, pol, lam in cases:
        fd = index_derivative(mat, pol, lam)
        an = analytic_index_derivative(mat, pol, lam)
        assert fd == pytest.approx(an, rel=1e-6)


def test_h_refinement_converged(bbo):
    full = index_derivative(bbo, ORDINARY, 800.0, step_nm=0.1)
    half = index_derivative(bbo, ORDINARY, 800.0, step_nm=0.05)
    assert abs(full - half) < 1e-9


def test_normal_dispersion_sign(bbo):
    assert index_derivative(bbo, ORDINARY, 800.0) < 0


def test_group_index_exceeds_phase_index(bbo):
    n = refractive_index(bbo, ORDINARY, 800.0)
    n_g = group_index(bbo, ORDINARY, 800.0)
    assert n_g >= n


def test_group_index_stronger_dispersion_at_blue(bbo):
    assert group_index(bbo, ORDINARY, 403.0) > group_index(bbo, ORDINARY, 800.0)


def test_group_index_golden_yvo4(yvo4):
    assert group_index(yvo4, ORDINARY, 403.0) == pytest.approx(
        GOLDEN_N_G_YVO4_O_403, abs=1e-9)


def test_walkoff_vanishes_along_and_across_axis(bbo):
    assert walkoff_angle(bbo, 0.0, 800.0) == pytest.approx(0.0, abs=1e-15)
    assert walkoff_angle(bbo, 90.0, 800.0) == pytest.approx(0.0, abs=1e-12)


def test_walkoff_golden_displacement(bbo):
    rho = walkoff_angle(bbo, 29.0, 800.0)
    assert rho == pytest.approx(GOLDEN_WALKOFF_RAD, abs=1e-12)
    disp = lateral_displacement(bbo, 29.0, 800.0, 15.76)
    assert disp == pytest.approx(GOLDEN_DISPLACEMENT_MM, abs=1e-9)
    assert 0.5 < disp < 2.0  # millimeter scale


def test_walkoff_sign_flips_for_positive_uniaxial(bbo, yvo4):
    assert walkoff_angle(bbo, 45.0, 800.0) > 0
    assert walkoff_angle(yvo4, 45.0, 800.0) < 0


def test_out_of_range_error_names_material(bbo, yvo4):
    with pytest.raises(WavelengthRangeError, match="BBO"):
        refractive_index(bbo, ORDINARY, 200.0)
    with pytest.raises(WavelengthRangeError, match="YVO4"):
        refractive_index(yvo4, ORDINARY, 6000.0)
    # derivative samples straddle the edge
    lo = bbo.ordinary.range_nm[0]
    with pytest.raises(WavelengthRangeError):
        index_derivative(bbo, ORDINARY, lo + 0.01, step_nm=0.1)


def test_unknown_material_rejected(library):
    with pytest.raises(ConfigError, match="unknown material"):
        library.get("KTP")


def test_missing_materials_file_rejected(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_library(tmp_path / "nope.json")


def test_multi_resonance_entry_loads(library):
    tam = library.get("BBO-tamosauskas2018")
    n = refractive_index(tam, ORDINARY, 800.0)
    kato = library.get("BBO-kato1986")
    # independent fits of the same crystal agree to a few 1e-4
    assert n == pytest.approx(refractive_index(kato, ORDINARY, 800.0), abs=5e-4)

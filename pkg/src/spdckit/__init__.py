"""Design and analysis toolkit for collinear two-crystal sources of
polarization-entangled photon pairs at non-degenerate wavelengths."""

from .materials import (Material, MaterialLibrary, ORDINARY, Polarization,
                        SellmeierForm, default_library, extraordinary_at,
                        group_index, index_derivative, lateral_displacement,
                        load_library, refractive_index, walkoff_angle)
from .phasematch import (PairSolution, PhaseMatchConfig, conjugate_wavelength,
                         degeneracy_cutoff_angle, delta_k, solve_angle,
                         solve_signal_idler)
from .spectrum import (BandwidthScanResult, Spectrum, bandwidth_scan,
                       default_grid, spectral_density)
from .compensation import (AxisPlane, CompensatorSolution, OpticalStack,
                           PhaseMap, Segment, StackElement,
                           optimize_compensators, phase_map,
                           predict_visibility, relative_phase,
                           two_crystal_stack)
from .expsim import (CountRecord, MeasurementSetting, SourceParams,
                     accidental_correction, coincidence_probability,
                     coupling_efficiency_estimate, fidelity_estimate,
                     rates_vs_power, simulate_run, visibility_from_scan)

__version__ = "0.1.0"

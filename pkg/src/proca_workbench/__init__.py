"""Machine verification workbench for constrained wave-type field equations.

Two layers over one set of claims:

* an exact symbolic calculus (`symforms`, `systems`, `exact_checks`) proving
  operator identities on rational polynomial sections, and
* a discretized periodic-box numeric layer (`lattice`, `fock`, `detector`)
  realizing the Green operators, the particle-sector observables, and the
  polarization-detector experiment at desk scale.

The command-line entry point lives in `cli`; deterministic artifact writers in
`reports`.
"""

from .blockops import (ADVANCED, GreenPair, LinearMap, NotInvertible,
                       ORIENTATIONS, RETARDED, ResidualReport,
                       StructureViolation, assemble_green, lu_green,
                       schur_complement, verify_constraint, verify_green,
                       verify_intertwine)
from .detector import (DegenerateAngle, DetectorConfig, DetectorPipeline,
                       DisplacementReport, MalusReport, ModeProfile,
                       PhaseAliasing, PolarizationQubit, beam_axis_direction,
                       build_state, displaced_form_factor, form_factor,
                       induced_response, malus_sweep, polarization_covector,
                       scalar_comparison)
from .exact_checks import (check_identity_suite, check_structure_suite,
                           run_all_suites)
from .fock import (GridMismatch, ModeGrid, ModeState, ScalarModeState,
                   TruncationOverflow, expectation_quadratic, fock_oracle,
                   inner, kmap, kmap_scalar, norm)
from .lattice import (DegreeMismatch, Grid, GridCalculus, GridGauge,
                      LatticeField, OrderOverflow, SupportViolation,
                      band_limited_source, born_green, born_pair, bump_source,
                      charged_green_pair, g3_violation, kg_green,
                      kg_green_pair, load_snapshot, multiplet_green,
                      proca_green, proca_green_pair, probe_sources,
                      save_snapshot)
from .symforms import (Form, GaugeBackground, box, codiff, covector, dual,
                       ext_d, interior, kg_op, pairing, wedge)
from .systems import (BlockSystem, SymCalculus, SymGauge, charged_system,
                      multiplet_system, neutral_alt_system, neutral_system,
                      vector_scalar_system)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

"""Exceptional points of non-Hermitian matrix families."""

__version__ = "0.1.0"

from .epfind import (  # noqa: E402
    EPLocation,
    PairingReport,
    SearchRegion,
    conjugate_pairing_check,
    ep_candidates,
    ep_closed_form,
    ep_refine,
    ep_scan,
    family_eps,
    locate,
    winding_number,
)
from .errors import *  # noqa: E402,F401,F403
from .model import (  # noqa: E402
    MatrixFamily,
    TwoLevelParams,
    build_general,
    build_two_level,
    direct_sum,
    resonator_eps,
    resonator_params,
    rotation_matrix,
    two_level_family,
)
from .monodromy import LoopSpec, MonodromyResult, encircle, gauge_align, sheet_swap_check  # noqa: E402
from .spectra import (  # noqa: E402
    char_poly,
    discriminant,
    eigenvalues_closed_form,
    eigenvalues_general,
    eigenvector_general,
    eigenvectors_2x2,
    poly_roots,
    set_jitter_seed,
    theta_angle,
)
from .sweep import (  # noqa: E402
    CrossingClass,
    CrossingKind,
    TrajectorySet,
    classify_crossing,
    crossing_angle_at_ep,
    mixing_angle,
    read_csv,
    sheet_of,
    sweep_real,
    theta_sweep,
    write_csv,
)

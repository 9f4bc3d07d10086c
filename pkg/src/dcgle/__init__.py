"""Plane waves of the delayed cubic-quintic complex Ginzburg-Landau equation.

Existence, finite-delay and large-delay stability, and direct simulation.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DcgleError,
    DegenerateBranch,
    DegenerateSpectrum,
    InadmissibleWavenumber,
    NoRealAmplitude,
    NonFiniteField,
    ParseError,
    RangeError,
    ResolutionWarning,
    SchemaMismatch,
    SeedingWarning,
    StepSizeUnderflow,
    UnknownKey,
)
from .model import (  # noqa: E402
    ModelParams,
    PlaneWave,
    amplitude_branch_of,
    nodelay_amplitude,
    planewave_from_theta,
    residual_pw,
    theta_of,
    tube_residual,
)
from .trivial import TrivialKind, classify_trivial, hopf_curve, trivial_gamma, trivial_rightmost  # noqa: E402
from .existence import branch_trace, count_planewaves, find_planewaves, pw_frequency_residual  # noqa: E402
from .stability import (  # noqa: E402
    StabilityKind,
    char_fn,
    classify_pw_large_delay,
    nodelay_growth,
    nodelay_longwave,
    rightmost_root,
    stability_map,
    strong_spectrum,
    weak_gamma,
)
from .sim import Grid, Modal, Noise, estimate_planewave, integrate, make_initial_history, rhs  # noqa: E402
from .config import parse_config, serialize_config  # noqa: E402
from .artifacts import CsvArtifact, emit_plot_script  # noqa: E402
from .scenarios import run_scenario  # noqa: E402

"""BES(3) from r > 0: exact and discretised path simulators, the Williams
splice at the ultimate minimum, closed-form laws of the last-hitting time g,
and Monte Carlo checks that tie them together."""
from .closed_forms import (
    DomainError,
    QuadratureError,
    QuadratureSpec,
    azema_Z,
    g_cdf,
    g_density,
    g_laplace,
    g_laplace_numeric,
    hitting_cdf,
    hitting_density,
    ultimate_inf_cdf,
)
from .kernels import BACKEND
from .rng import RngStream, make_rng
from .sampling import (
    FirstPassageSample,
    GSample,
    sample_first_passage,
    sample_first_passage_many,
    sample_g_exact,
    sample_g_exact_many,
)
from .simulators import (
    ConfigError,
    PathSummary,
    SamplePath,
    SimConfig,
    WilliamsSample,
    path_summary,
    simulate_euler_sde,
    simulate_figure1_walk,
    simulate_norm3d,
    simulate_williams,
    williams_terminal,
)

__version__ = "0.1.0"

"""Joint power allocation and BS-user association for multi-cell Massive MIMO downlink."""
__version__ = "0.1.0"

from .bounds import (GainStatistics, Scheme, SINRTargets, rate_from_sinr, sinr_from_rate,  # noqa: E402
                     sinr_general, sinr_mrt, sinr_per_bs, sinr_zf)
from .config import NetworkConfig, load_config  # noqa: E402
from .network import NetworkRealization, generate_network  # noqa: E402
from .powermin import max_snr_baseline, solve_powermin  # noqa: E402
from .maxmin import maxmin_bisection  # noqa: E402
from .coherent import coherent_maxmin, solve_coherent_powermin  # noqa: E402

__all__ = [
    "GainStatistics", "Scheme", "SINRTargets", "rate_from_sinr", "sinr_from_rate", "sinr_general",
    "sinr_mrt", "sinr_per_bs", "sinr_zf", "NetworkConfig", "load_config", "NetworkRealization",
    "generate_network", "max_snr_baseline", "solve_powermin", "maxmin_bisection",
    "coherent_maxmin", "solve_coherent_powermin",
]

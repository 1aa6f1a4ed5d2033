"""Weighted shift operators, t-entropy and the variational principle on finite measured dynamical systems."""

__version__ = "0.1.0"

from .dynsys import FiniteDynSystem, ValidationError, make_system  # noqa: E402
from .shiftop import lambda_cycle_mean, lambda_power, spectral_report  # noqa: E402
from .tentropy import tau, tau_n, tau_n_D  # noqa: E402
from .verify import vp_check  # noqa: E402

__all__ = [
    "FiniteDynSystem",
    "ValidationError",
    "make_system",
    "lambda_cycle_mean",
    "lambda_power",
    "spectral_report",
    "tau",
    "tau_n",
    "tau_n_D",
    "vp_check",
]

"""Static non-linearity of current-steering DACs under random unit mismatch.

Monte Carlo simulation of thermometer, binary and segmented transfer curves,
together with the limit laws of the normalized INL_max: the Kolmogorov law
for thermometer coding and the dyadic-increment law M for binary coding.
"""

from .mismatch import DacSpec, UnitCurrentVector, sample_unit_currents
from .transfer import Architecture, NonlinearityProfile, TransferCurve, nonlinearity, transfer
from .thermo import kolmogorov_cdf, mean_X, quantile_X, var_X, yield_thermometer
from .binary import cov_matrix, det_cov, inv_cov, mean_M, sample_M, var_M, yield_binary
from .montecarlo import TrialConfig, run_trials, simulate, yield_mc

__version__ = "0.1.0"

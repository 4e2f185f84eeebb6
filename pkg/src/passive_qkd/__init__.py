"""Finite-key secret key rates for fully passive decoy-state BB84."""

from .channel import (ChannelParams, ChannelRates, channel_eta, ec_leakage, expected_counts,
                      expected_rates, perfect_pe_targets, sample_counts)
from .characterization import SourceCharacterization, characterize
from .concentration import (KatoCoeffs, kato_direct_lower, kato_direct_upper,
                            kato_reverse_lower, kato_reverse_upper, serfling_upsilon)
from .data import ObservedData, ProtocolParams
from .decoy import (DecoyBounds, LPInstance, build_error_lp, build_yield_lp, estimate_bounds,
                    exact_bounds, solve_lp)
from .fock import FockMatrix, fock_matrix, mixed_basis_matrix, td_tables, trace_distance
from .keyrate import KeyRateReport, error_budget, evaluate, key_length
from .optimizer import SearchSpace, random_search
from .source import (IntensityInterval, RegionMoments, RegionSpec, SourceConfig,
                     intensity_density, max_intensity, region_average, region_moments,
                     union_moments)

__version__ = "0.1.0"

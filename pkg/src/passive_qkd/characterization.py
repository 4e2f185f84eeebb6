"""Everything the estimators need to know about one source configuration.

Settings combine both poles of a basis (key: R and L, test: H and V).  By
the mirror symmetry of the source both poles carry identical photon-number
statistics and alignment, so setting moments are twice the single-pole ones.
"""

from __future__ import annotations

from dataclasses import dataclass

from .fock import TDTables, td_tables
from .source import (DEFAULT_N_MAX, DEFAULT_TOL, RegionMoments, RegionQuadrature,
                     SourceConfig, region_moments, union_moments)


@dataclass(frozen=True)
class SourceCharacterization:
    config: SourceConfig
    key: tuple[RegionMoments, ...]
    test: tuple[RegionMoments, ...]
    key_union: RegionMoments
    test_union: RegionMoments
    td: TDTables
    key_quads: tuple[RegionQuadrature, ...]
    test_quads: tuple[RegionQuadrature, ...]

    @property
    def lambda_test(self) -> float:
        """Alignment of the single-photon component over the union of H regions."""
        return self.test_union.lam

    @property
    def n_cut(self) -> int:
        return self.td.n_cut


def characterize(config: SourceConfig, n_cut: int = 4, n_max: int = DEFAULT_N_MAX,
                 tol: float = DEFAULT_TOL) -> SourceCharacterization:
    """Moments per setting, over each basis union, and trace-distance tables."""
    nu_t = config.nu_t
    key = tuple(region_moments(r, nu_t, n_max, tol).scaled(2.0) for r in config.key_regions("R"))
    test = tuple(region_moments(r, nu_t, n_max, tol).scaled(2.0) for r in config.test_regions("H"))
    key_union = union_moments(config.key_regions("R"), nu_t, n_max, tol).scaled(2.0)
    test_union = union_moments(config.test_regions("H"), nu_t, n_max, tol).scaled(2.0)
    return SourceCharacterization(
        config, key, test, key_union, test_union, td_tables(config, n_cut, tol),
        tuple(RegionQuadrature(r, nu_t, tol) for r in config.key_regions("R")),
        tuple(RegionQuadrature(r, nu_t, tol) for r in config.test_regions("H")),
    )

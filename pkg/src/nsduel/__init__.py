"""Simulation and analysis toolkit for non-stationary dueling bandits.

Provides preference-sequence environments, Borda and weighted-Borda regret
accounting, significant-shift non-stationarity measures, a soft-elimination
dueling bandit learner with scheduled replays and restarts, and a seeded
experiment harness with a CLI.
"""

from ._kernels import BACKEND, HAVE_NUMBA, NUMBA_ENV_FLAG
from .learner import (EMPIRICAL_EVICT_CONST, PRESETS, THEORY_EVICT_CONST,
                      BaseAlgState, EvictionRecord, Specification,
                      estimate_wbs, eviction_threshold, play_distribution)
from .measures import (GICViolationError, MeasureLimitError, MeasureReport,
                       approx_winner_changes, approx_winner_oracle,
                       compute_report, sbs_oracle, significant_borda_shifts,
                       skw, skw_oracle, suw, suw_oracle, total_variation,
                       winner_switch_counts)
from .meta import (EpisodeRecord, ReplaySchedule, RunResult, dyadic_durations,
                   run_meta, run_oracle_restart, run_uniform_baseline)
from .preferences import (NoCondorcetWinnerError, PreferenceMatrixError,
                          PreferenceSequence, borda_hardness_matrix, check_gic,
                          check_sst, check_sti, condorcet_winner,
                          conflict_3x3_matrix, gen_borda_hardness,
                          gen_conflict_3x3, gen_gic_k_hardness, gen_gic_pair,
                          gen_piecewise, gen_random_piecewise, gen_stationary,
                          gen_winner_flip, gic_pair_matrices, gic_winner_set,
                          random_gic_matrix, random_matrix, sample_duel,
                          validate_preference_matrix)
from .scores import (RegretLedger, borda_regret_inc, borda_score, borda_winner,
                     condorcet_regret_inc, point_mass, simplex_grid,
                     uniform_weight, validate_weight, weighted_borda_gap,
                     weighted_regret_inc, weighted_winner)

__version__ = "0.1.0"

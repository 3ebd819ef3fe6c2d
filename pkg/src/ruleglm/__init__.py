# ruleglm: generalized linear rule models trained by column generation.
from .datatable import DataError, RawColumn, RawTable, load_csv, load_table, target_mode
from .binarizer import (BinarizedDataset, BinaryFeature, FeatureDictionary,
                        binarize, build_dictionary)
from .glm import (DesignMatrix, FitResult, fit_weighted_l1, gradient_smooth,
                  log_partition, objective, predict_mean, residuals)
from .pricing import (Conjunction, PricedColumn, PricingProblem, delta_v,
                      lower_bound, price_exact, price_heuristic, reduced_cost)
from .trainer import (PricingConfig, TrainConfig, TrainTrace, debias,
                      init_restricted_set, train)
from .model import (NumericTerm, Rule, RuleEnsemble, RuleLiteral, complexity,
                    load, predict_row, predict_table, render, save)
from .evaluate import (MetricSet, TradeoffPoint, accuracy, brier,
                       cross_validate, default_grid, make_folds,
                       nested_cross_validate, pareto, r_squared,
                       select_lambda, sweep, sweep_csv)

__version__ = "0.1.0"

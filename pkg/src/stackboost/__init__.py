"""Stacked ensembles of gradient boosting machines trained jointly with a
differentiable meta-model, plus plain GBM and random-forest baselines."""

from .baseline import RandomForest, rf_predict, rf_train
from .bench import BenchmarkConfig, GbmConfig, RfConfig, compute_metric, emit_report, run_benchmark
from .data import (Dataset, SplitPlan, gen_blobs, gen_friedman1, gen_friedman2, load_csv,
                   load_longley, make_cv_plans, write_csv)
from .gbm import (Gbm, LearnerConfig, gbm_fit_stage, gbm_init, gbm_predict, gbm_residuals,
                  gbm_train, line_search)
from .loss import Loss, loss_gradient, loss_value, softmax
from .meta import (LinearMeta, MetaGradients, MlpMeta, meta_forward, meta_init,
                   meta_loss_input_grad, meta_loss_param_grad, meta_sgd_step)
from .serialize import load_model, save_model
from .stack import (StackConfig, StackedEnsemble, member_weight_report, stack_epoch, stack_init,
                    stack_member_residuals, stack_predict, stack_predict_class, stack_train,
                    train_meta)
from .tree import RegressionTree, fit_tree, predict_tree

__version__ = "0.1.0"

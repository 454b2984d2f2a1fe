"""Learned intra predictors: model types, forward passes and analytic collapse.

Harness, training and persistence code imports from this package; the three
predictor families share one calling convention through `predict`.
"""

from prediction.types import BlockSpec, NNModel, LinearNoIntercept, LinearWithIntercept
from prediction.layers import (elu, nn_forward, nn_forward_linearized, linear_forward,
                               affine_forward, clip_block, predict, predict_all, predict_batch)
from prediction.collapse import (master_matrix, normalize_rows, intercept,
                                 collapse_no_intercept, collapse_with_intercept)

"""Plain gradient boosting on Friedman 1: staged training loss and test error."""

import numpy as np

from stackboost import LearnerConfig, gbm_train, gen_friedman1

train = gen_friedman1(100, noise_sd=1.0, seed=0)
test = gen_friedman1(500, noise_sd=1.0, seed=1)

gbm = gbm_train(train, stages=100, base_config=LearnerConfig("tree", depth=3), learning_rate=0.1)

# history[k] is the mean training loss after k stages
for k in (0, 10, 50, 100):
    print(f"stage {k:3d}  train loss {gbm.history[k]:8.4f}")

for k, pred in enumerate(gbm.staged_predict(test.features)):
    if k in (10, 50, 100):
        print(f"stage {k:3d}  test MSE {np.mean((pred - test.targets) ** 2):8.4f}")

print("target variance", float(test.targets.var()))

"""A linear-meta stack of 20 boosted members with depths 2..21 on Friedman 1.

Members get only 10 initial stages here so the joint epochs have work to do.
Prints the composed training loss per epoch and the members the meta-model
weights most heavily.
"""

import numpy as np

from stackboost import (LearnerConfig, StackConfig, gbm_train, gen_friedman1, make_cv_plans,
                        member_weight_report, stack_train)

data = gen_friedman1(100, noise_sd=1.0, seed=0)
plan = make_cv_plans(data, repetitions=1, seed=3)[0]
train, test = data.subset(plan.train_indices), data.subset(plan.test_indices)

cfg = StackConfig(K=20, epochs=30, init_stages=10, member_lr=0.05, meta_lr=0.05)
ens = stack_train(train, cfg)
print("composed training loss by epoch (standardised units):")
print(" ".join(f"{v:.4f}" for v in ens.history[::5]))

mse = np.mean((ens.predict(test.features) - test.targets) ** 2)
gbm = gbm_train(train, stages=100, base_config=LearnerConfig("tree", 3))
print(f"test MSE: stack {mse:.3f}, plain GBM "
      f"{np.mean((gbm.predict(test.features) - test.targets) ** 2):.3f}")

print("largest meta weights:")
for w in member_weight_report(ens)[:5]:
    print(f"  member {w.index:2d} (depth {w.config.depth:2d})  |w| = {w.magnitude:.4f}")

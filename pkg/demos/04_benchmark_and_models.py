"""Small benchmark over all four families, then a model file round trip."""

import tempfile
from pathlib import Path

import numpy as np

from stackboost import (BenchmarkConfig, emit_report, gbm_train, gen_friedman2, load_longley,
                        load_model, run_benchmark, save_model)
from stackboost.bench import markdown_table

datasets = [load_longley(), gen_friedman2(100, seed=0)]
runs = run_benchmark(datasets, config=BenchmarkConfig(), repetitions=3, seed=0)
print(markdown_table(runs))

out = Path(tempfile.mkdtemp())
emit_report(runs, out / "report.csv", timing=False)
print((out / "report.csv").read_text())

# model files are plain text; numbers are written with 17 significant digits
data = datasets[0]
gbm = gbm_train(data, stages=20)
save_model(gbm, out / "gbm.model", data.task, data.feature_names)
back = load_model(out / "gbm.model").model
print("max save/load drift:", np.abs(back.predict(data.features) - gbm.predict(data.features)).max())
print("\n".join((out / "gbm.model").read_text().splitlines()[:10]))

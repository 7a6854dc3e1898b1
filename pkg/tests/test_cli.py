import csv

import numpy as np
import pytest

from stackboost.cli import main
from stackboost.config import ConfigError, load_benchmark_config, load_run_config
from stackboost.data import gen_blobs, gen_friedman1, load_longley, write_csv


def write(path, text):
    path.write_text(text)
    return str(path)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


GBM_INI = """[task]
dataset = longley
[model]
family = gbm
stages = {stages}
depth = {depth}
learning_rate = {lr}
[output]
model = {model}
"""


def test_train_writes_model_and_summary(tmp_path, capsys):
    cfg = write(tmp_path / "a.ini", GBM_INI.format(stages=20, depth=3, lr=0.1, model="a.model"))
    assert main(["train", cfg]) == 0
    out = capsys.readouterr().out
    assert "train_loss=" in out and "wall_ms=" in out
    first = (tmp_path / "a.model").read_bytes()
    assert main(["--config", cfg, "train"]) == 0
    assert (tmp_path / "a.model").read_bytes() == first


def test_malformed_key_exits_1(tmp_path, capsys):
    text = GBM_INI.format(stages=2, depth=3, lr=0.1, model="b.model")
    cfg = write(tmp_path / "b.ini", text.replace("depth = 3", "depht = 3"))
    assert main(["train", cfg]) == 1
    assert "depht" in capsys.readouterr().err


def test_bad_value_and_missing_data(tmp_path):
    cfg = write(tmp_path / "c.ini", GBM_INI.format(stages="many", depth=3, lr=0.1, model="c"))
    assert main(["train", cfg]) == 1
    cfg = write(tmp_path / "d.ini", GBM_INI.format(stages=2, depth=3, lr=0.1, model="d")
                .replace("longley", "missing.csv"))
    assert main(["train", cfg]) == 2


def test_training_error_exits_3(tmp_path):
    cfg = write(tmp_path / "e.ini", "[task]\ngenerator = friedman1\nn = 3\n[model]\n"
                "family = linear_stack\nK = 5\ninit = disjoint\n[output]\nmodel = e.model\n")
    assert main(["train", cfg]) == 3


def test_predict_memorises_training_file(tmp_path):
    cfg = write(tmp_path / "s.ini", GBM_INI.format(stages=1, depth=20, lr=1.0, model="s.model"))
    assert main(["train", cfg]) == 0
    data = tmp_path / "longley.csv"
    write_csv(load_longley(), data)
    out = tmp_path / "p.csv"
    assert main(["predict", str(tmp_path / "s.model"), str(data), str(out)]) == 0
    rows = read_rows(out)
    assert rows[0] == ["pred"]
    np.testing.assert_allclose([float(r[0]) for r in rows[1:]], load_longley().targets[:, 0],
                               atol=1e-9)


def test_predict_empty_input_and_mismatch(tmp_path, capsys):
    cfg = write(tmp_path / "g.ini", GBM_INI.format(stages=3, depth=2, lr=0.1, model="g.model"))
    main(["train", cfg])
    model = str(tmp_path / "g.model")
    empty = write(tmp_path / "empty.csv", "GNP.deflator,GNP,Unemployed,Armed.Forces,Population,Year\n")
    out = tmp_path / "o.csv"
    assert main(["predict", model, empty, str(out)]) == 0
    assert out.read_text() == "pred\n"
    wrong = write(tmp_path / "w.csv", "a,b\n1,2\n")
    assert main(["predict", model, wrong, str(out)]) == 2
    err = capsys.readouterr().err
    assert "m=6" in err and "2 columns" in err


def test_predict_classification_adds_class_column(tmp_path):
    ds = gen_blobs(30, 3, 2, seed=0)
    write_csv(ds, tmp_path / "blobs.csv")
    cfg = write(tmp_path / "c.ini", "[task]\ngenerator = blobs\nn = 30\nfeatures = 2\n"
                "[model]\nfamily = rf\nrf_trees = 5\n[output]\nmodel = c.model\n")
    assert main(["train", cfg]) == 0
    out = tmp_path / "cp.csv"
    assert main(["predict", str(tmp_path / "c.model"), str(tmp_path / "blobs.csv"), str(out)]) == 0
    rows = read_rows(out)
    assert rows[0] == ["pred_1", "pred_2", "pred_3", "class"]
    assert len(rows) == 31


def test_stack_config_parsing(tmp_path):
    cfg = load_run_config(write(tmp_path / "s.ini", "[task]\ngenerator = friedman1\n[model]\n"
                                "family = stack\nmeta = mlp\nK = 4\ndepth_schedule = 2-5\n"
                                "hidden = 8,8\n[training]\nepochs = 3\nseed = 9\n"))
    assert cfg.family == "mlp_stack"
    assert cfg.model.depths == (2, 3, 4, 5) and cfg.model.hidden == (8, 8)
    assert cfg.model.epochs == 3 and cfg.seed == 9


@pytest.mark.parametrize("text, fragment", [
    ("[task]\ngenerator = friedman1\n[bogus]\n", "bogus"),
    ("[model]\nfamily = gbm\n", "dataset"),
    ("[task]\ngenerator = friedman1\n[model]\nfamily = gbm\n[training]\nepochs = 2\n", "epochs"),
    ("[task]\ngenerator = friedman1\n[model]\nfamily = linear_stack\nmeta = mlp\n", "meta"),
    ("[task]\ngenerator = friedman1\n[model]\nfamily = xgb\n", "xgb"),
])
def test_config_errors(tmp_path, text, fragment):
    with pytest.raises(ConfigError, match=fragment):
        load_run_config(write(tmp_path / "x.ini", text))


def test_benchmark_config(tmp_path):
    write_csv(gen_friedman1(30, seed=0), tmp_path / "f.csv")
    spec = load_benchmark_config(write(tmp_path / "b.ini", "[benchmark]\ndatasets = f.csv, longley\n"
                                       "families = gbm, rf\nrepetitions = 3\n[rf]\nrf_trees = 7\n"))
    assert [d.n_rows for d in spec.datasets] == [30, 16]
    assert spec.families == ("gbm", "rf") and spec.config.rf.n_trees == 7


def test_benchmark_command_reproducible(tmp_path, capsys):
    ini = write(tmp_path / "b.ini", "[benchmark]\ndatasets = friedman1, longley\n"
                "families = gbm, rf\nrepetitions = 2\n[gbm]\nstages = 10\n[rf]\nrf_trees = 5\n")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["--seed", "7", "benchmark", ini, "--report", str(a), "--no-timing"]) == 0
    assert main(["benchmark", ini, "--seed", "7", "--report", str(b), "--no-timing"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(read_rows(a)) == 5
    md = tmp_path / "r.md"
    assert main(["benchmark", ini, "--format", "markdown", "--report", str(md)]) == 0
    assert md.read_text().startswith("| Data set |")
    assert "report written" in capsys.readouterr().out


def test_benchmark_needs_a_source(capsys):
    assert main(["benchmark"]) == 1


def test_gradcheck_exit_codes(capsys):
    assert main(["gradcheck", "--trials", "3"]) == 0
    first = capsys.readouterr().out
    assert main(["gradcheck", "--trials", "3"]) == 0
    second = capsys.readouterr().out
    # error values are reproducible; only the timing line differs
    assert first.splitlines()[:4] == second.splitlines()[:4]
    assert main(["gradcheck", "--trials", "2", "--perturb", "1e-3"]) == 4
    assert main(["gradcheck", "--trials", "0"]) == 1

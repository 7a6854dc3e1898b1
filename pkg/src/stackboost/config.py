"""Run configuration files: flat ``key = value`` lines under ``[section]`` headers.

A training config has ``[task]``, ``[model]``, ``[training]`` and ``[output]``
sections.  A benchmark config has ``[benchmark]`` plus one optional section
per model family (``[gbm]``, ``[linear_stack]``, ``[mlp_stack]``, ``[rf]``)
holding the same keys a ``[model]`` section would.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

from .bench import (FAMILIES, LINEAR_STACK, MLP_STACK, PLAIN_GBM, RANDOM_FOREST,
                    BenchmarkConfig, GbmConfig, RfConfig)
from .data import (CLASSIFICATION, REGRESSION, Dataset, gen_blobs, gen_friedman1,
                   gen_friedman2, load_csv, load_longley)
from .loss import KINDS
from .stack import StackConfig


class ConfigError(ValueError):
    pass


def _int(v: str) -> int:
    return int(v)


def _uint(v: str) -> int:
    i = int(v)
    if i < 0:
        raise ValueError("must be non-negative")
    return i


def _bool(v: str) -> bool:
    low = v.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _ints(v: str) -> tuple[int, ...]:
    return tuple(int(p) for p in v.replace(" ", "").split(",") if p)


def _depths(v: str) -> tuple[int, ...]:
    """``2-21`` for an inclusive range, or a comma list such as ``2,4,8``."""
    v = v.replace(" ", "")
    if "-" in v and "," not in v:
        lo, hi = (int(p) for p in v.split("-"))
        if hi < lo:
            raise ValueError("empty depth range")
        return tuple(range(lo, hi + 1))
    return _ints(v)


def _choice(*options):
    def parse(v: str) -> str:
        if v not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return v
    return parse


def _optional(parse):
    def wrapped(v: str):
        return None if v.strip().lower() in ("", "none") else parse(v)
    return wrapped


def _gbm_init(v: str):
    return "mean" if v == "mean" else float(v)


# key -> (field name, parser), per family
_SHARED = {
    "min_leaf": ("min_leaf", _int),
    "base": ("base", _choice("tree", "gbm")),
    "inner_stages": ("inner_stages", _int),
    "inner_depth": ("inner_depth", _int),
    "loss": ("loss", _choice(*KINDS)),
}
GBM_KEYS = {
    **_SHARED,
    "stages": ("stages", _int),
    "depth": ("depth", _int),
    "learning_rate": ("learning_rate", float),
    "init": ("init", _gbm_init),
}
STACK_KEYS = {
    **_SHARED,
    "K": ("K", _int),
    "epochs": ("epochs", _int),
    "member_lr": ("member_lr", float),
    "meta_lr": ("meta_lr", float),
    "init": ("init", _choice("exact", "random", "disjoint", "mean")),
    "init_stages": ("init_stages", _int),
    "init_lr": ("init_lr", float),
    "depth_schedule": ("depths", _depths),
    "meta": ("meta", _choice("linear", "mlp")),
    "hidden": ("hidden", _ints),
    "freeze_bias": ("freeze_bias", _bool),
    "meta_init": ("meta_init", _choice("uniform", "optimal", "random")),
    "meta_pretrain_steps": ("meta_pretrain_steps", _int),
    "residuals_use": ("residuals_use", _choice("pre", "post")),
    "standardize": ("standardize", _bool),
    "early_stop_patience": ("early_stop_patience", _optional(_int)),
    "early_stop_fraction": ("early_stop_fraction", float),
}
RF_KEYS = {
    "rf_trees": ("n_trees", _int),
    "rf_depth": ("max_depth", _optional(_int)),
    "rf_features": ("features", _optional(_int)),
    "min_leaf": ("min_leaf", _int),
}
FAMILY_KEYS = {PLAIN_GBM: GBM_KEYS, LINEAR_STACK: STACK_KEYS, MLP_STACK: STACK_KEYS,
               "stack": STACK_KEYS, RANDOM_FOREST: RF_KEYS}

TASK_KEYS = {
    "dataset": str, "target": str, "task": _choice(REGRESSION, CLASSIFICATION),
    "generator": _choice("friedman1", "friedman2", "blobs", "longley"),
    "n": _int, "noise": float, "classes": _int, "features": _int, "separation": float,
    "seed": _uint, "name": str,
}
TRAINING_KEYS = {"seed": _uint, "epochs": _int, "repetitions": _int, "threads": _int}
OUTPUT_KEYS = {"model": str, "report": str, "format": _choice("csv", "markdown")}
BENCHMARK_KEYS = {"datasets": str, "families": str, "repetitions": _int, "seed": _uint,
                  "train_fraction": float, "report": str, "format": _choice("csv", "markdown"),
                  "threads": _int}


def _parse_section(section, schema: dict, where: str) -> dict:
    out = {}
    for key, raw in section.items():
        if key not in schema:
            raise ConfigError(f"unknown key {key!r} in [{where}]")
        parse = schema[key]
        try:
            out[key] = parse(raw.strip())
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value for {key!r} in [{where}]: {raw!r} ({exc})") from None
    return out


def family_config(family: str, values: dict[str, str], where: str = "model"):
    """Build the typed config of ``family`` from raw ``key = value`` strings."""
    if family not in FAMILY_KEYS:
        raise ConfigError(f"unknown family {family!r}; expected one of "
                          f"{', '.join(FAMILY_KEYS)}")
    schema = FAMILY_KEYS[family]
    kwargs = {}
    for key, raw in values.items():
        if key not in schema:
            raise ConfigError(f"unknown key {key!r} in [{where}] for family {family!r}")
        name, parse = schema[key]
        try:
            kwargs[name] = parse(raw.strip())
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value for {key!r} in [{where}]: {raw!r} ({exc})") from None
    try:
        if family == PLAIN_GBM:
            return GbmConfig(**kwargs)
        if family == RANDOM_FOREST:
            return RfConfig(**kwargs)
        fixed = {LINEAR_STACK: "linear", MLP_STACK: "mlp"}.get(family)
        if fixed and kwargs.setdefault("meta", fixed) != fixed:
            raise ConfigError(f"key 'meta' conflicts with family {family!r}")
        return StackConfig(**kwargs)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"invalid [{where}] settings: {exc}") from None


def _read(path) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keys are case sensitive (K)
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    return cp


@dataclass
class RunConfig:
    task: dict = field(default_factory=dict)
    family: str = PLAIN_GBM
    model: object = field(default_factory=GbmConfig)
    seed: int = 0
    repetitions: int = 20
    threads: int | None = None
    model_path: str | None = None
    report_path: str | None = None
    report_format: str = "csv"
    base_dir: Path = Path(".")

    def dataset(self) -> Dataset:
        return dataset_from_spec(self.task, self.seed, self.base_dir)


BUILTIN_DATASETS = ("friedman1", "friedman2", "blobs", "longley")


def dataset_from_spec(spec: dict, seed: int = 0, base_dir: Path = Path(".")) -> Dataset:
    """Load or generate the dataset described by a ``[task]`` block."""
    s = spec.get("seed", seed)
    gen = spec.get("generator")
    if gen is None and spec.get("dataset") in BUILTIN_DATASETS \
            and not (base_dir / spec["dataset"]).exists():
        gen = spec["dataset"]
    if gen == "friedman1":
        ds = gen_friedman1(spec.get("n", 100), spec.get("noise", 1.0), s)
    elif gen == "friedman2":
        ds = gen_friedman2(spec.get("n", 100), spec.get("noise", 0.0), s)
    elif gen == "blobs":
        ds = gen_blobs(spec.get("n", 90), spec.get("classes", 3), spec.get("features", 5),
                       spec.get("separation", 5.0), s)
    elif gen == "longley":
        ds = load_longley()
    else:
        path = Path(spec["dataset"])
        if not path.is_absolute():
            path = base_dir / path
        targets = [t.strip() for t in spec["target"].split(",")] if "target" in spec else None
        ds = load_csv(path, targets, spec.get("task", REGRESSION))
    if "name" in spec:
        ds = replace(ds, name=spec["name"])
    return ds


def load_run_config(path) -> RunConfig:
    cp = _read(path)
    allowed = {"task", "model", "training", "output"}
    for sec in cp.sections():
        if sec not in allowed:
            raise ConfigError(f"unknown section [{sec}]")
    task = _parse_section(cp["task"], TASK_KEYS, "task") if cp.has_section("task") else {}
    if not task.get("generator") and not task.get("dataset"):
        raise ConfigError("[task] needs either 'dataset' or 'generator'")
    training = _parse_section(cp["training"], TRAINING_KEYS, "training") \
        if cp.has_section("training") else {}
    output = _parse_section(cp["output"], OUTPUT_KEYS, "output") if cp.has_section("output") else {}
    raw_model = dict(cp["model"]) if cp.has_section("model") else {}
    family = raw_model.pop("family", PLAIN_GBM).strip()
    if "epochs" in training:
        if FAMILY_KEYS.get(family) is not STACK_KEYS:
            raise ConfigError(f"key 'epochs' in [training] needs a stacked family, not {family!r}")
        raw_model.setdefault("epochs", str(training["epochs"]))
    model = family_config(family, raw_model)
    if family == "stack":
        family = f"{model.meta}_stack"
    return RunConfig(task=task, family=family, model=model, seed=training.get("seed", 0),
                     repetitions=training.get("repetitions", 20), threads=training.get("threads"),
                     model_path=output.get("model"), report_path=output.get("report"),
                     report_format=output.get("format", "csv"),
                     base_dir=Path(path).resolve().parent)


@dataclass
class BenchmarkSpec:
    datasets: list[Dataset]
    families: tuple[str, ...]
    config: BenchmarkConfig
    repetitions: int = 20
    seed: int = 0
    threads: int | None = None
    report_path: str | None = None
    report_format: str = "csv"


def _named_dataset(name: str, seed: int, base_dir: Path) -> Dataset:
    if name in BUILTIN_DATASETS:
        return dataset_from_spec({"generator": name}, seed)
    if name.endswith(".csv"):
        return dataset_from_spec({"dataset": name}, seed, base_dir)
    raise ConfigError(f"unknown dataset {name!r}")


def load_benchmark_config(path) -> BenchmarkSpec:
    cp = _read(path)
    allowed = {"benchmark", *FAMILIES}
    for sec in cp.sections():
        if sec not in allowed:
            raise ConfigError(f"unknown section [{sec}]")
    if not cp.has_section("benchmark"):
        raise ConfigError("missing [benchmark] section")
    b = _parse_section(cp["benchmark"], BENCHMARK_KEYS, "benchmark")
    families = tuple(f.strip() for f in b.get("families", ",".join(FAMILIES)).split(",") if f.strip())
    for f in families:
        if f not in FAMILIES:
            raise ConfigError(f"unknown family {f!r} in [benchmark]")
    cfg = BenchmarkConfig(train_fraction=b.get("train_fraction", 0.75))
    for fam in FAMILIES:
        if cp.has_section(fam):
            cfg = replace(cfg, **{fam: family_config(fam, dict(cp[fam]), fam)})
    seed = b.get("seed", 0)
    base = Path(path).resolve().parent
    names = [n.strip() for n in b.get("datasets", "longley").split(",") if n.strip()]
    return BenchmarkSpec([_named_dataset(n, seed, base) for n in names], families, cfg,
                         b.get("repetitions", 20), seed, b.get("threads"), b.get("report"),
                         b.get("format", "csv"))


def builtin_suite(name: str, seed: int = 0) -> BenchmarkSpec:
    """Desk-scale suites: ``regression-small`` (Longley, Friedman 1 and 2) and
    ``classification-small`` (three separated Gaussian blobs)."""
    if name == "regression-small":
        datasets = [load_longley(), gen_friedman1(100, 1.0, seed), gen_friedman2(100, 0.0, seed)]
        cfg = BenchmarkConfig(mlp_stack=StackConfig(meta="mlp", hidden=(20, 20, 20)))
    elif name == "classification-small":
        datasets = [gen_blobs(90, 3, 5, 5.0, seed)]
        cfg = BenchmarkConfig()
    else:
        raise ConfigError(f"unknown suite {name!r}; expected regression-small or "
                          "classification-small")
    return BenchmarkSpec(datasets, FAMILIES, cfg, seed=seed)

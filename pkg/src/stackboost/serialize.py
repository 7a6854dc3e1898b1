"""Versioned plain-text model files.

Layout (one record per line, space separated, numbers as ``%.17g``)::

    stackboost-model 1
    model gbm|stack|forest
    task regression|classification
    features <json list of names>
    classes <json list of labels>           (classification only)
    <model body>

A tree is ``tree <n_nodes> <T> <max_depth|none> <min_leaf>`` followed by one
line per node in pre-order: ``split <feature> <threshold> <left> <right> <n>``
or ``leaf <n> <v_1> ... <v_T>``.  A GBM is ``gbm <T> <n_stages> <lr> <loss>``,
``init <v...>``, then per stage ``stage <coef> tree|gbm`` and the learner.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .baseline import RandomForest
from .gbm import Gbm, LearnerConfig
from .loss import Loss
from .meta import LinearMeta, MlpMeta
from .stack import StackedEnsemble
from .tree import LEAF, RegressionTree

MAGIC = "stackboost-model"
VERSION = 1


class FormatError(ValueError):
    pass


def _num(v) -> str:
    return "%.17g" % float(v)


def _nums(a) -> str:
    return " ".join(_num(v) for v in np.ravel(a))


@dataclass
class ModelFile:
    """A fitted model plus the metadata needed to score new CSV rows."""

    model: object
    task: str = "regression"
    feature_names: tuple | None = None
    class_labels: tuple | None = None

    @property
    def kind(self) -> str:
        return {Gbm: "gbm", StackedEnsemble: "stack", RandomForest: "forest"}[type(self.model)]


# -- writing -----------------------------------------------------------------

def _write_tree(t: RegressionTree, out: list[str]) -> None:
    depth = "none" if t.max_depth is None else str(t.max_depth)
    out.append(f"tree {t.n_nodes} {t.n_outputs} {depth} {t.min_samples_leaf}")
    for i in range(t.n_nodes):
        if t.feature[i] == LEAF:
            out.append(f"leaf {t.n_samples[i]} {_nums(t.value[i])}")
        else:
            out.append(f"split {t.feature[i]} {_num(t.threshold[i])} {t.left[i]} {t.right[i]} "
                       f"{t.n_samples[i]} {_nums(t.value[i])}")


def _write_gbm(g: Gbm, out: list[str]) -> None:
    out.append(f"gbm {g.n_outputs} {g.n_stages} {_num(g.learning_rate)} {g.loss.kind}")
    out.append(f"init {_nums(g.init_prediction)}")
    for base, coef in g.stages:
        if isinstance(base, Gbm):
            out.append(f"stage {_num(coef)} gbm")
            _write_gbm(base, out)
        else:
            out.append(f"stage {_num(coef)} tree")
            _write_tree(base, out)


def _write_matrix(name: str, a: np.ndarray, out: list[str]) -> None:
    out.append(f"{name} {a.shape[0]} {a.shape[1]}")
    out.extend(_nums(row) for row in a)


def _write_stack(e: StackedEnsemble, out: list[str]) -> None:
    out.append(f"stack {e.K} {e.n_outputs} {e.loss.kind} {_num(e.member_lr)} {_num(e.meta_lr)} "
               f"{e.residuals_use} {e.epochs_done}")
    out.append(f"shift {_nums(e.target_shift)}")
    out.append(f"scale {_nums(e.target_scale)}")
    for j, (g, c) in enumerate(zip(e.members, e.member_configs)):
        out.append(f"member {j} {c.kind} {c.depth} {c.min_leaf} {c.inner_stages} {c.inner_depth}")
        _write_gbm(g, out)
    meta = e.meta
    if isinstance(meta, LinearMeta):
        out.append(f"meta linear {int(meta.freeze_bias)}")
        _write_matrix("W", meta.W, out)
        out.append(f"b {_nums(meta.b)}")
    else:
        out.append(f"meta mlp {int(meta.freeze_bias)} {len(meta.weights)}")
        for w, b in zip(meta.weights, meta.biases):
            _write_matrix("W", w, out)
            out.append(f"b {_nums(b)}")


def _write_forest(f: RandomForest, out: list[str]) -> None:
    out.append(f"forest {f.n_trees} {f.feature_subsample} {int(f.bootstrap)} "
               f"{int(f.classification)}")
    out.append(f"seeds {' '.join(str(s) for s in f.seeds)}")
    for t in f.trees:
        _write_tree(t, out)


def dumps(mf: ModelFile) -> str:
    out = [f"{MAGIC} {VERSION}", f"model {mf.kind}", f"task {mf.task}",
           f"features {json.dumps(list(mf.feature_names) if mf.feature_names else None)}"]
    if mf.class_labels is not None:
        out.append(f"classes {json.dumps(list(mf.class_labels))}")
    {"gbm": _write_gbm, "stack": _write_stack, "forest": _write_forest}[mf.kind](mf.model, out)
    return "\n".join(out) + "\n"


def save_model(model, path, task: str = "regression", feature_names=None,
               class_labels=None) -> None:
    mf = model if isinstance(model, ModelFile) else ModelFile(model, task, feature_names,
                                                              class_labels)
    Path(path).write_text(dumps(mf), encoding="utf-8")


# -- reading -----------------------------------------------------------------

class _Reader:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.pos = 0

    def next(self, tag: str | None = None) -> list[str]:
        if self.pos >= len(self.lines):
            raise FormatError("unexpected end of model file")
        parts = self.lines[self.pos].split(" ")
        self.pos += 1
        if tag is not None and parts[0] != tag:
            raise FormatError(f"line {self.pos}: expected {tag!r}, found {parts[0]!r}")
        return parts

    def peek(self) -> str:
        return self.lines[self.pos].split(" ", 1)[0] if self.pos < len(self.lines) else ""

    def rest(self, tag: str) -> str:
        line = self.lines[self.pos]
        self.next(tag)
        return line[len(tag) + 1:]


def _floats(parts) -> np.ndarray:
    return np.array([float(p) for p in parts], dtype=np.float64)


def _read_tree(r: _Reader) -> RegressionTree:
    _, n, T, depth, min_leaf = r.next("tree")
    n, T = int(n), int(T)
    feat = np.full(n, LEAF, dtype=np.intp)
    thr = np.zeros(n)
    left = np.full(n, LEAF, dtype=np.intp)
    right = np.full(n, LEAF, dtype=np.intp)
    value = np.zeros((n, T))
    count = np.zeros(n, dtype=np.intp)
    for i in range(n):
        p = r.next()
        if p[0] == "leaf":
            count[i] = int(p[1])
            value[i] = _floats(p[2:])
        elif p[0] == "split":
            feat[i], thr[i], left[i], right[i], count[i] = int(p[1]), float(p[2]), int(p[3]), int(p[4]), int(p[5])
            value[i] = _floats(p[6:])
        else:
            raise FormatError(f"line {r.pos}: expected a tree node")
    return RegressionTree(feat, thr, left, right, value, count,
                          None if depth == "none" else int(depth), int(min_leaf))


def _read_gbm(r: _Reader) -> Gbm:
    _, T, n_stages, lr, loss = r.next("gbm")
    init = _floats(r.next("init")[1:])
    g = Gbm(init, Loss(loss, int(T)), float(lr))
    for _ in range(int(n_stages)):
        _, coef, kind = r.next("stage")
        base = _read_gbm(r) if kind == "gbm" else _read_tree(r)
        g.stages.append((base, float(coef)))
    return g


def _read_matrix(r: _Reader) -> np.ndarray:
    _, rows, cols = r.next("W")
    return np.array([_floats(r.next()) for _ in range(int(rows))]).reshape(int(rows), int(cols))


def _read_stack(r: _Reader) -> StackedEnsemble:
    _, K, T, loss, member_lr, meta_lr, residuals_use, epochs = r.next("stack")
    shift = _floats(r.next("shift")[1:])
    scale = _floats(r.next("scale")[1:])
    members, configs = [], []
    for _ in range(int(K)):
        _, _, kind, depth, min_leaf, inner_stages, inner_depth = r.next("member")
        configs.append(LearnerConfig(kind, int(depth), int(min_leaf), int(inner_stages),
                                     int(inner_depth)))
        members.append(_read_gbm(r))
    head = r.next("meta")
    if head[1] == "linear":
        W = _read_matrix(r)
        meta = LinearMeta(W, _floats(r.next("b")[1:]), bool(int(head[2])))
    else:
        ws, bs = [], []
        for _ in range(int(head[3])):
            ws.append(_read_matrix(r))
            bs.append(_floats(r.next("b")[1:]))
        meta = MlpMeta(ws, bs, bool(int(head[2])))
    return StackedEnsemble(members, configs, meta, Loss(loss, int(T)), float(member_lr),
                           float(meta_lr), residuals_use, shift, scale, int(epochs))


def _read_forest(r: _Reader) -> RandomForest:
    _, n, k, bootstrap, cls = r.next("forest")
    seeds = [int(s) for s in r.next("seeds")[1:]]
    trees = [_read_tree(r) for _ in range(int(n))]
    return RandomForest(trees, seeds, int(k), bool(int(bootstrap)), bool(int(cls)))


def loads(text: str) -> ModelFile:
    r = _Reader(text)
    head = r.next(MAGIC)
    if len(head) != 2 or head[1] != str(VERSION):
        raise FormatError(f"unsupported model file version {head[1:]}")
    kind = r.next("model")[1]
    task = r.next("task")[1]
    names = json.loads(r.rest("features"))
    labels = json.loads(r.rest("classes")) if r.peek() == "classes" else None
    readers = {"gbm": _read_gbm, "stack": _read_stack, "forest": _read_forest}
    if kind not in readers:
        raise FormatError(f"unknown model kind {kind!r}")
    model = readers[kind](r)
    return ModelFile(model, task, tuple(names) if names else None,
                     tuple(labels) if labels else None)


def load_model(path) -> ModelFile:
    return loads(Path(path).read_text(encoding="utf-8"))

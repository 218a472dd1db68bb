"""Acceptance checks. Each test prints one PASS/FAIL line (see with ``pytest -s``).

The end-to-end checks read the files written by ``imugest reproduce`` and
recompute every number from them rather than trusting the report's own flags.
"""
import csv
import json
import math
import time

import numpy as np
import pytest

import oracles
from imugest import dnn
from imugest.baselines import KnnModel, knn_predict, svm_predict_batch, svm_train
from imugest.cli import main
from imugest.features import (FeatureMatrix, f_ar, f_kurtosis, f_mav, f_mean, f_mobility, f_rms,
                              f_skew, f_std, f_var, f_wl)
from imugest.pca import fit_pca, inverse_transform, transform
from imugest.signal_io import segment_recording


def _verdict(name, ok, detail, elapsed=None, budget=None):
    timed = elapsed is not None
    in_time = not timed or elapsed < budget
    status = "PASS" if ok and in_time else "FAIL"
    clock = f" [{elapsed:.2f}s < {budget}s]" if timed else ""
    print(f"\nACCEPTANCE {status}: {name}: {detail}{clock}")
    assert ok, detail
    assert in_time, f"took {elapsed:.2f}s, budget {budget}s"


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def test_1_feature_oracles():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst, worst_ar = 0.0, 0.0
    n_vec = 120
    for _ in range(n_vec):
        n = int(rng.integers(20, 600))
        x = rng.normal(loc=rng.normal(scale=3), scale=rng.uniform(0.1, 5), size=n)
        xs = [float(v) for v in x]
        mu = oracles.mean(xs)
        pairs = [(f_mean(x), mu), (f_mav(x), abs(mu)), (f_var(x), oracles.var(xs)),
                 (f_std(x), math.sqrt(oracles.var(xs))), (f_rms(x), oracles.rms(xs)),
                 (f_wl(x), oracles.wl(xs)), (f_skew(x), oracles.moment_ratio(xs, 3)),
                 (f_kurtosis(x), oracles.moment_ratio(xs, 4)),
                 (f_mobility(x), oracles.mobility(xs))]
        worst = max(worst, max(_rel(a, b) for a, b in pairs))
        a, ref = f_ar(x, 4), oracles.yule_walker(xs, 4)
        worst_ar = max(worst_ar, float(np.max(np.abs(a - ref) / np.maximum(np.abs(ref), 1e-12))))
    elapsed = time.perf_counter() - t0
    _verdict("feature oracles", worst <= 1e-9 and worst_ar <= 1e-6,
             f"{n_vec} vectors, max rel err {worst:.2e} (<=1e-9), AR {worst_ar:.2e} (<=1e-6)",
             elapsed, 5)


def test_2_gradient_check():
    rng = np.random.default_rng(202)
    t0 = time.perf_counter()
    archs = [(10, 15, 15, 15, 6)] * 4
    while len(archs) < 20:
        depth = int(rng.integers(1, 4))
        archs.append(tuple(int(v) for v in rng.integers(1, 7, size=depth + 2)))
    worst = 0.0
    for i, sizes in enumerate(archs):
        lam = 0.0 if i % 2 == 0 else float(rng.uniform(0.01, 1.0))
        model = dnn.init_model(sizes, seed=i, hyper=dnn.Hyper(l2=lam))
        m = int(rng.integers(2, 9))
        X = rng.normal(size=(m, sizes[0]))
        Y = dnn.one_hot(rng.integers(0, sizes[-1], m), sizes[-1])
        fd = oracles.finite_difference_grads(model.weights, X, Y, lam, h=1e-5)
        for g, f in zip(dnn.backprop(model, X, Y), fd):
            worst = max(worst, oracles.max_relative_error(g, f))
    elapsed = time.perf_counter() - t0
    _verdict("gradient check", worst <= 1e-6,
             f"{len(archs)} nets incl. 10-15-15-15-6, max rel err {worst:.2e} (<=1e-6)",
             elapsed, 30)


def test_3_pca_validity():
    rng = np.random.default_rng(303)
    t0 = time.perf_counter()
    worst = {"orthonormality": 0.0, "eigen": 0.0, "reconstruction": 0.0, "diagonal": 0.0}
    for _ in range(20):
        mix = rng.normal(size=(12, 12)) * rng.uniform(0.1, 10, size=12)
        x = rng.normal(size=(50, 12)) @ mix + rng.normal(scale=5, size=12)
        fm = FeatureMatrix(x, np.zeros(50, dtype=int), [f"c{i}" for i in range(12)])
        model = fit_pca(fm, l=12)
        v, lam = model.components, model.eigenvalues
        z = (x - model.column_means) / model.column_scales
        c = z.T @ z / 49
        cnorm = np.linalg.norm(c, 2)
        proj = transform(model, fm).values
        pc = proj.T @ proj / 49
        recon = inverse_transform(model, proj)
        worst["orthonormality"] = max(worst["orthonormality"], np.abs(v.T @ v - np.eye(12)).max())
        worst["eigen"] = max(worst["eigen"],
                             np.linalg.norm(c @ v - v * lam, axis=0).max() / cnorm)
        worst["reconstruction"] = max(worst["reconstruction"],
                                      np.abs(recon - x).max() / np.abs(x).max())
        worst["diagonal"] = max(worst["diagonal"],
                                np.abs(pc - np.diag(np.diag(pc))).max() / cnorm)
    elapsed = time.perf_counter() - t0
    ok = all(val <= 1e-8 for val in worst.values())
    detail = "20 matrices 50x12, " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    _verdict("PCA validity", ok, detail + " (all <=1e-8)", elapsed, 5)


def test_4_baseline_oracles():
    rng = np.random.default_rng(404)
    t0 = time.perf_counter()
    mismatches = 0
    for case in range(1000):
        m = int(rng.integers(1, 30))
        d = int(rng.integers(1, 5))
        weighting = "uniform" if case % 2 else "inverse-distance"
        if case % 3 == 0:
            pts = rng.integers(-2, 3, size=(m, d)).astype(float)
            q = rng.integers(-2, 3, size=d).astype(float)
        else:
            pts = rng.normal(size=(m, d))
            q = rng.normal(size=d)
        labels = rng.integers(0, 4, m)
        k = int(rng.integers(1, m + 1))
        got = knn_predict(KnnModel(pts, labels, k, weighting), q)
        mismatches += got != oracles.knn_scan(pts, labels, k, q, weighting)

    svm_acc = []
    for trial in range(5):
        w = rng.normal(size=4)
        w /= np.linalg.norm(w)
        X = rng.normal(scale=3, size=(200, 4))
        X = X[np.abs(X @ w + 0.5) >= 1.0][:60]
        y = (X @ w + 0.5 > 0).astype(int)
        svm_acc.append(float(np.mean(svm_predict_batch(svm_train(X, y, seed=trial), X) == y)))
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and min(svm_acc) == 1.0
    _verdict("baseline oracles", ok,
             f"kNN mismatches {mismatches}/1000, SVM train accuracy min {min(svm_acc):.3f}",
             elapsed, 10)


def _tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def reproduce_runs(tmp_path_factory):
    runs = []
    for name in ("run_a", "run_b"):
        out = tmp_path_factory.mktemp(name)
        t0 = time.perf_counter()
        code = main(["reproduce", "--seed", "42", "--out", str(out)])
        runs.append((out, code, time.perf_counter() - t0))
    return runs


def _read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def test_5_end_to_end_reproduction(reproduce_runs):
    out, code, elapsed = reproduce_runs[0]
    assert code == 0
    problems, summary = [], []
    for modality in ("accel", "gyro"):
        d = out / "subject1" / modality
        acc = {kind: json.loads((d / f"report_{kind}.json").read_text())["accuracy"]
               for kind in ("dnn", "knn", "svm")}
        _, trace = _read_csv(d / "trace_dnn.csv")
        costs = [float(c) for _, c in trace]
        init = json.loads((out / "report.json").read_text())["subjects"]["subject1"][modality]
        first = [init["dnn"]["initial_cost"]] + costs[:20]
        decreasing = len(first) == 21 and all(b < a for a, b in zip(first, first[1:]))
        it = {int(p): float(a) for p, a in _read_csv(d / "curve_iterations.csv")[1]}
        ft = {int(p): float(a) for p, a in _read_csv(d / "curve_features.csv")[1]}
        checks = {"dnn>=0.90": acc["dnn"] >= 0.90,
                  "dnn>=knn-0.02": acc["dnn"] >= acc["knn"] - 0.02,
                  "J strictly decreasing x20": decreasing,
                  "acc(300)-acc(150)<=0.05": it[300] - it[150] <= 0.05,
                  "acc(l=10)>=acc(l=1)": ft[10] >= ft[1]}
        problems += [f"{modality}: {k}" for k, v in checks.items() if not v]
        summary.append(f"{modality} dnn {acc['dnn']:.3f} knn {acc['knn']:.3f} "
                       f"svm {acc['svm']:.3f} T150/300 {it[150]:.3f}/{it[300]:.3f} "
                       f"l1/l10 {ft[1]:.3f}/{ft[10]:.3f}")
    detail = "; ".join(summary) + (f"; failed: {problems}" if problems else "")
    _verdict("end-to-end reproduce", not problems, detail, elapsed, 120)


def test_6_determinism(reproduce_runs):
    (a, code_a, ta), (b, code_b, tb) = reproduce_runs
    tree_a, tree_b = _tree(a), _tree(b)
    differing = sorted(k for k in tree_a.keys() | tree_b.keys() if tree_a.get(k) != tree_b.get(k))
    ok = code_a == code_b == 0 and not differing and len(tree_a) > 0
    _verdict("determinism", ok,
             f"{len(tree_a)} files compared, {len(differing)} differ {differing[:3]}",
             max(ta, tb), 120)


def test_7_protocol_arithmetic(default_recording):
    spec, rec, labels = default_recording
    segs = segment_recording(rec, spec.protocol, labels)
    fs = spec.sample_rate
    lengths = {len(s.samples) for s in segs}
    first = spec.protocol.window_start(0, fs)
    ok = (fs == 148.15 and len(segs) == 120 and lengths == {444} and first == 74
          and np.array_equal(segs[0].samples, rec.samples[74:74 + 444]))
    _verdict("protocol arithmetic", ok,
             f"{len(segs)} segments, lengths {sorted(lengths)}, first start {first}")

"""Acceptance suite: one criterion per test, one printed pass/fail line each.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
lines as they execute.
"""

import csv
import time

import numpy as np

from segdict.baselines import VqCodebook, assign_codes, kmeans_train
from segdict.beat_model import BeatMatrix, SegmentSpec
from segdict.classifier import (decision_values, kkt_violations, rbf_gram,
                                smo_train)
from segdict.cli import main
from segdict.dict_learner import (TrainConfig, lagrange_dual_update,
                                  train_segment_dictionaries)
from segdict.evaluation import (SparseDictFeatures, SplitPlan, VqFeatures,
                                bench_feature_extraction, stratified_split,
                                wilcoxon_rank_sum)
from segdict.ingest import build_beat_matrix, load_dataset
from segdict.sparse_coder import (SolverOptions, coding_objective,
                                  feature_sign_solve, kkt_violation)
from segdict.synthetic import generate_planted_dataset, write_beats_csv

from oracles import (constrained_lsq_pg, kmeans_exhaustive, lasso_brute_force,
                     nearest_center_scan, one_nn_accuracy, ranksum_enumeration,
                     svm_dual_pg)

TABLE1_COUNTS = {"N": 350, "/": 100, "A": 100, "V": 200,
                 "f": 100, "F": 150, "S": 100, "R": 100}


def check(num, desc, ok):
    print(f"\ncriterion {num:02d} {'PASS' if ok else 'FAIL'}: {desc}")
    assert ok, f"criterion {num:02d} failed: {desc}"


def test_criterion_01_feature_sign_optimality():
    rng = np.random.default_rng(1001)
    start = time.perf_counter()
    ok = True
    for _ in range(100):
        d = int(rng.integers(2, 7))
        k = int(rng.integers(2, 9))
        lam = float(rng.uniform(0.05, 0.5))
        D = rng.normal(size=(d, k))
        D /= np.linalg.norm(D, axis=0)
        y = rng.normal(size=d)
        x = feature_sign_solve(D, y, SolverOptions(lam=lam))
        obj = coding_objective(D, y.reshape(-1, 1), x.reshape(-1, 1), lam)
        best, _ = lasso_brute_force(D, y, lam)
        ok &= kkt_violation(D, y, x, lam) <= 1e-6
        ok &= abs(obj - best) <= 1e-8
    elapsed = time.perf_counter() - start
    ok &= elapsed < 10.0
    check(1, f"feature-sign KKT at 1e-6 and brute-force objective match at "
             f"1e-8 on 100 instances in {elapsed:.2f}s (< 10s)", ok)


def test_criterion_02_scalar_lasso_closed_form():
    rng = np.random.default_rng(1002)
    ok = True
    for _ in range(1000):
        d_val = float(rng.uniform(0.1, 3.0)) * (1 if rng.random() < 0.5 else -1)
        y_val = float(rng.normal() * 3.0)
        lam = float(rng.uniform(0.01, 2.0))
        x = feature_sign_solve(np.array([[d_val]]), np.array([y_val]),
                               SolverOptions(lam=lam))[0]
        dty = d_val * y_val
        expected = np.sign(dty) * max(abs(dty) - lam, 0.0) / (d_val * d_val)
        ok &= abs(x - expected) <= 1e-10
    check(2, "scalar lasso equals the soft-threshold closed form at 1e-10 "
             "on 1000 instances", ok)


def test_criterion_03_lagrange_dual_correctness():
    rng = np.random.default_rng(1003)
    ok = True
    for _ in range(50):
        d = int(rng.integers(2, 6))
        k = int(rng.integers(2, 6))
        n = int(rng.integers(k, 21))
        Y = rng.normal(size=(d, n))
        X = rng.normal(size=(k, n)) * (rng.random(size=(k, n)) < 0.5)
        X[0] += rng.normal(size=n) * 0.1
        cfg = TrainConfig(k=k, lam=0.1, newton_tol=1e-12, newton_max=300)
        D, dual = lagrange_dual_update(X, Y, cfg)
        ours = float(np.sum((Y - D.atoms @ X) ** 2))
        _, oracle = constrained_lsq_pg(Y, X, iters=200000)
        ok &= abs(ours - oracle) <= 1e-4
        resid = np.linalg.norm(-2 * Y @ X.T + 2 * D.atoms @ (X @ X.T)
                               + 2 * D.atoms * dual.lam[None, :])
        ok &= resid <= 1e-6 * max(np.linalg.norm(Y @ X.T), 1e-12)
        ok &= bool(np.all(np.linalg.norm(D.atoms, axis=0) <= 1.0 + 1e-6))
        ok &= bool(np.all(np.diff(np.array(dual.r_history)) >= -1e-12))
    check(3, "dual update within 1e-4 of projected-gradient oracle, "
             "stationarity 1e-6, norms <= 1+1e-6, R non-decreasing "
             "(50 instances)", ok)


def test_criterion_04_alternation_monotonicity():
    rng = np.random.default_rng(1004)
    gamma, j_count, k, n = 18, 3, 4, 90
    d = gamma // j_count
    beats = np.empty((gamma, n))
    for j in range(j_count):
        atoms = rng.normal(size=(d, k))
        atoms /= np.linalg.norm(atoms, axis=0)
        usage = rng.integers(k, size=n)
        coeff = rng.uniform(1.0, 3.0, size=n)
        beats[j * d:(j + 1) * d] = (atoms[:, usage] * coeff
                                    + 0.15 * rng.normal(size=(d, n)))
    matrix = BeatMatrix(beats, tuple("N" * n))
    spec = SegmentSpec.equal(gamma, j_count)
    cfg = TrainConfig(k=k, lam=0.05, outer_iters=30, seed=11,
                      newton_tol=1e-11, newton_max=300)
    history = {j: [] for j in range(1, j_count + 1)}
    train_segment_dictionaries(matrix, spec, cfg, np.arange(n),
                               log_fn=lambda j, t, o: history[j].append(o))
    ok = True
    for j, objs in history.items():
        ok &= len(objs) >= 2
        ok &= bool(np.all(np.diff(np.array(objs)) <= 1e-9))
    check(4, "coding objective non-increasing within 1e-9 per alternation "
             "over a 30-alternation budget, all segments", ok)


def _synthetic_workload(tmp_path, seed=0):
    data = tmp_path / "synthetic.csv"
    assert main(["gen-synthetic", "--out", str(data), "--seed", str(seed)]) == 0
    return data


def test_criterion_05_planted_model_end_to_end(tmp_path):
    start = time.perf_counter()
    data = _synthetic_workload(tmp_path)
    out = tmp_path / "out"
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        f"dataset_path = {data}\n"
        "target_len = 200\n"
        "j_count = 4\n"
        "k = 16\n"
        "lambda = 0.1\n"
        "outer_iters = 30\n"
        "folds = 3\n"
        "train_counts = c1:25,c2:25,c3:25,c4:25\n"
        "seed = 0\n"
        f"output_dir = {out}\n", encoding="utf-8")
    rc = main(["run-experiment", "--config", str(cfg), "--method", "sparse"])
    elapsed = time.perf_counter() - start

    beats = build_beat_matrix(load_dataset(data), 200)
    counts = {f"c{i}": 25 for i in range(1, 5)}
    train_idx, test_idx = stratified_split(beats, SplitPlan(counts, seed=0))
    labels = np.array(beats.labels)
    oracle_acc = one_nn_accuracy(beats.samples[:, train_idx], labels[train_idx],
                                 beats.samples[:, test_idx], labels[test_idx])

    with open(out / "runs_sparse.csv", newline="", encoding="utf-8") as fh:
        row = next(csv.DictReader(fh))
    accuracy = float(row["accuracy"])
    ok = (rc == 0 and train_idx.size == 100 and test_idx.size == 400
          and oracle_acc >= 0.95 and accuracy >= 0.95 and elapsed < 120.0)
    check(5, f"planted 4-class pipeline: accuracy {accuracy:.3f} >= 0.95 "
             f"(1-NN oracle {oracle_acc:.3f}), 100/400 split, "
             f"{elapsed:.1f}s < 120s", ok)


def test_criterion_06_vq_baseline(tmp_path):
    rng = np.random.default_rng(1006)
    ok = True
    # distortion monotone on every fixture run here
    for seed in range(5):
        segments = rng.normal(size=(4, 50))
        cb = kmeans_train(segments, 5, seeding="random", seed=seed)
        d = np.array(cb.distortions)
        ok &= bool(np.all(np.diff(d) <= 1e-9 * np.maximum(d[:-1], 1.0)))
    # exhaustive-partition optimum on clustered 12-point instances
    centers = np.array([[0.0, 0.0], [6.0, 1.0], [3.0, 7.0]])
    points = np.vstack([c + 0.8 * np.random.default_rng(77).normal(size=(4, 2))
                        for c in centers])
    best = kmeans_exhaustive(points, 3)
    hits = 0
    for seed in range(10):
        cb = kmeans_train(points.T, 3, seeding="kmeanspp", seed=seed)
        d = np.array(cb.distortions)
        ok &= bool(np.all(np.diff(d) <= 1e-9 * np.maximum(d[:-1], 1.0)))
        if cb.distortions[-1] <= best + 1e-9:
            hits += 1
    ok &= hits >= 8
    # vq_encode equals the linear-scan oracle
    codebook = VqCodebook(rng.normal(size=(3, 6)))
    segs = rng.normal(size=(3, 30))
    ok &= bool(np.array_equal(assign_codes(codebook, segs),
                              nearest_center_scan(codebook.centers.T, segs.T)))
    check(6, f"k-means monotone distortion, exhaustive optimum on "
             f"{hits}/10 seeds (>= 8), encode matches linear scan", ok)


def test_criterion_07_svm():
    ok = True
    # XOR fixture
    X = np.array([[0.0, 1.0, 0.0, 1.0], [0.0, 1.0, 1.0, 0.0]])
    y = np.array([1.0, 1.0, -1.0, -1.0])
    machine = smo_train(X, y, 10.0, 1.0)
    ok &= bool(np.all(np.sign(decision_values(machine, X)) == y))
    ok &= kkt_violations(machine, X, y).max() <= 1e-3
    # 6-point dual objective against the dense-QP oracle
    rng = np.random.default_rng(1007)
    X6 = np.hstack([rng.normal(size=(2, 3)) - 2.0, rng.normal(size=(2, 3)) + 2.0])
    y6 = np.array([1.0, 1.0, 1.0, -1.0, -1.0, -1.0])
    m6 = smo_train(X6, y6, 10.0, 0.5)
    a_signed = np.zeros(6)
    a_signed[m6.sv_indices] = m6.alphas
    K = rbf_gram(X6, X6, 0.5)
    ours = 0.5 * float(a_signed @ (K @ a_signed)) - float(np.abs(a_signed).sum())
    _, oracle = svm_dual_pg(K, y6, 10.0)
    ok &= abs(ours - oracle) <= 1e-4
    ok &= kkt_violations(m6, X6, y6).max() <= 1e-3
    # every machine trained on random instances passes KKT at 1e-3
    for _ in range(8):
        m_count = int(rng.integers(6, 24))
        Xr = rng.normal(size=(3, m_count))
        yr = np.where(rng.random(m_count) < 0.5, 1.0, -1.0)
        if np.all(yr == yr[0]):
            yr[0] = -yr[0]
        mr = smo_train(Xr, yr, float(rng.uniform(0.5, 20.0)),
                       float(rng.uniform(0.2, 2.0)))
        ok &= kkt_violations(mr, Xr, yr).max() <= 1e-3
    check(7, "SMO machines pass KKT at 1e-3, XOR reaches 4/4, 6-point dual "
             "within 1e-4 of the QP oracle", ok)


def test_criterion_08_wilcoxon_exact():
    rng = np.random.default_rng(1008)
    ok = True
    for n1 in range(1, 10):
        for n2 in range(1, 10 - n1 + 1):
            for _ in range(3):
                xs = rng.normal(size=n1)
                ys = rng.normal(size=n2) + rng.uniform(-1.0, 1.0)
                u, p = wilcoxon_rank_sum(xs, ys)
                u_ref, p_ref = ranksum_enumeration(xs, ys)
                ok &= abs(u - u_ref) <= 1e-12
                ok &= abs(p - p_ref) <= 1e-12
                _, p_swap = wilcoxon_rank_sum(ys, xs)
                ok &= abs(p - p_swap) <= 1e-12
    check(8, "exact rank-sum p matches full enumeration at 1e-12 for all "
             "size pairs with n1+n2 <= 10, with symmetry", ok)


def test_criterion_09_timing_direction(tmp_path):
    data = _synthetic_workload(tmp_path)
    beats = build_beat_matrix(load_dataset(data), 200)
    counts = {f"c{i}": 25 for i in range(1, 5)}
    train_idx, _ = stratified_split(beats, SplitPlan(counts, seed=0))
    spec = SegmentSpec.equal(200, 4)
    k = 16
    subset = 1000  # both methods cap at the same 100 training beats
    sparse = SparseDictFeatures(spec, TrainConfig(k=k, lam=0.1, outer_iters=10,
                                                  seed=0, subset_size=subset))
    vq = VqFeatures(spec, k, seeding="random", seed=0, subset_size=subset)
    rows = {r.method: r for r in bench_feature_extraction(
        [sparse, vq], beats, train_idx, reps=3)}
    sparse_total = rows["sparse"].total_s
    kmeans_total = rows["kmeans"].total_s
    check(9, f"sparse construction+encoding total {sparse_total:.3f}s is "
             f"strictly less than k-means VQ total {kmeans_total:.3f}s at "
             f"equal k={k} and equal training subset (median of 3)",
          sparse_total < kmeans_total)


def test_criterion_10_table1_scale_run(tmp_path):
    labels, samples = generate_planted_dataset(
        n_classes=8, beats_per_class=375, gamma=120, j_count=4, k=8, seed=3)
    class_map = dict(zip([f"c{i}" for i in range(1, 9)], TABLE1_COUNTS))
    keep_labels, keep_cols = [], []
    remaining = dict(TABLE1_COUNTS)
    for i, lab in enumerate(labels):
        name = class_map[lab]
        if remaining[name] > 0:
            remaining[name] -= 1
            keep_labels.append(name)
            keep_cols.append(i)
    data = tmp_path / "table1.csv"
    write_beats_csv(data, keep_labels, samples[:, keep_cols])

    records = load_dataset(data)
    counts_ok = all(sum(r.label == cls for r in records) == cnt
                    for cls, cnt in TABLE1_COUNTS.items())

    out = tmp_path / "out"
    cfg = tmp_path / "run.cfg"
    train_counts = ",".join(f"{cls}:12" for cls in TABLE1_COUNTS)
    cfg.write_text(
        f"dataset_path = {data}\n"
        "target_len = 120\n"
        "j_count = 4\n"
        "k = 8\n"
        "lambda = 0.1\n"
        "outer_iters = 10\n"
        "folds = 2\n"
        "c_grid = 10.0\n"
        "gamma_grid = 0.5\n"
        "n_coeffs = 60\n"
        f"train_counts = {train_counts}\n"
        "seed = 0\n"
        f"output_dir = {out}\n", encoding="utf-8")
    rc_sparse = main(["run-experiment", "--config", str(cfg),
                      "--method", "sparse", "--reps", "2"])
    rc_fft = main(["run-experiment", "--config", str(cfg),
                   "--method", "fft", "--reps", "2"])

    with open(out / "accuracy_table.csv", newline="", encoding="utf-8") as fh:
        acc_rows = list(csv.DictReader(fh))
    acc_ok = ({r["method"] for r in acc_rows} == {"sparse", "fft"}
              and all(cls in acc_rows[0] for cls in TABLE1_COUNTS))
    with open(out / "wilcoxon.csv", newline="", encoding="utf-8") as fh:
        wil_rows = list(csv.DictReader(fh))
    wil_ok = (wil_rows[0]["against"] == "sparse"
              and 0.0 < float(wil_rows[0]["p_value"]) <= 1.0)
    with open(out / "timing.csv", newline="", encoding="utf-8") as fh:
        tim_rows = list(csv.DictReader(fh))
    totals = [float(r["total_s"]) for r in tim_rows]
    tim_ok = ({r["method"] for r in tim_rows} == {"sparse", "fft"}
              and totals == sorted(totals, reverse=True))

    ok = (counts_ok and rc_sparse == 0 and rc_fft == 0
          and acc_ok and wil_ok and tim_ok)
    check(10, "run-experiment completes on a CSV with the 8-class training "
              "count profile and emits per-class accuracy, rank-sum, and "
              "timing tables", ok)

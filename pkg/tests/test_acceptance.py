"""Acceptance gate: one test per shipped guarantee, each printing a PASS/FAIL
line (run with `pytest -s tests/test_acceptance.py -v` to see them).

Every expected value is either a hand-derivable golden or comes from an
independent oracle (numeric-Jacobian Sampson machinery, finite differences,
scipy polar decomposition, Monte-Carlo synthetic scenes).
"""

import os
import subprocess
import sys
import time

import numpy as np
import pytest

import affgeo as ag
from affgeo.errors import SingularNormalMatrix
from affgeo.fileio import write_mat3, write_matches, write_points, write_pose
from affgeo.metrics import mma_weight_denominator
from affgeo.solvers import apply_homography

from conftest import general_position_acs, random_orientation_preserving


def _line(n, name, status, detail=""):
    tail = f" [{detail}]" if detail else ""
    print(f"ACCEPTANCE {n} ({name}): {status}{tail}")


# --- 1: closed-form Sampson vs generic first-order machinery --------------------

def test_criterion_1_sampson_equivalence():
    rng = np.random.default_rng(1001)
    start = time.perf_counter()
    worst = 0.0
    checked_points = checked_affine = 0

    def epi_fn(F):
        return lambda x: np.array([x[2], x[3], 1.0]) @ F @ np.array([x[0], x[1], 1.0])

    def aff_fn(F, row):
        def fn(x):
            col = np.array([x[4], x[5]])
            line2 = (F @ np.array([x[0], x[1], 1.0]))[:2]
            return col @ line2 + (F.T @ np.array([x[2], x[3], 1.0]))[row]

        return fn

    while checked_points < 1000 or checked_affine < 1000:
        F = rng.normal(size=(3, 3))
        F /= np.linalg.norm(F)
        x = rng.uniform(-2.0, 2.0, size=4)
        A = rng.normal(size=(2, 2))
        ac = ag.AffineCorrespondence(p1=x[:2], p2=x[2:], A=A)
        try:
            gen_p = ag.generic_sampson(epi_fn(F), x)
            gen_m = ag.generic_sampson(aff_fn(F, 0), np.r_[x, A[0, 0], A[1, 0]])
            gen_n = ag.generic_sampson(aff_fn(F, 1), np.r_[x, A[0, 1], A[1, 1]])
        except SingularNormalMatrix:
            continue
        sd_p = ag.sampson_point(x[:2], x[2:], F)
        sd_m, sd_n = ag.sampson_affine(ac, F)
        for closed, generic in ((sd_p, gen_p), (sd_m, gen_m), (sd_n, gen_n)):
            if generic > 1e-300:
                worst = max(worst, abs(closed - generic) / generic)
        checked_points += 1
        checked_affine += 1
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-8 and elapsed < 10.0
    _line(1, "Sampson equivalence", "PASS" if ok else "FAIL",
          f"{checked_points} point + {checked_affine}x2 affine instances, "
          f"max rel err {worst:.2e}, {elapsed:.1f} s")
    assert worst <= 1e-8
    assert elapsed < 10.0


# --- 2: invariance of Sampson values under rescaling of F -----------------------

def test_criterion_2_scale_invariance():
    rng = np.random.default_rng(1002)
    worst = 0.0
    for _ in range(300):
        F = rng.normal(size=(3, 3))
        F /= np.linalg.norm(F)
        x = rng.uniform(-2.0, 2.0, size=4)
        ac = ag.AffineCorrespondence(p1=x[:2], p2=x[2:], A=rng.normal(size=(2, 2)))
        base_p = ag.sampson_point(x[:2], x[2:], F)
        base_a = ag.sampson_affine(ac, F)
        for lam in (-3.0, 1e-6, 1e6):
            val_p = ag.sampson_point(x[:2], x[2:], lam * F)
            val_a = ag.sampson_affine(ac, lam * F)
            worst = max(worst, abs(val_p - base_p) / base_p if base_p else 0.0)
            for v, b in zip(val_a, base_a):
                if b:
                    worst = max(worst, abs(v - b) / b)
    ok = worst <= 1e-12
    _line(2, "scale invariance", "PASS" if ok else "FAIL", f"max rel change {worst:.2e}")
    assert ok


# --- 3: constraint algebra closes against an independent scene construction -----

def test_criterion_3_algebra_geometry_closure():
    worst_epc = worst_mn = 0.0
    n_checked = 0
    for seed in range(5):
        scene = ag.generate_scene(seed=3000 + seed, n_planes=3)
        acs, _ = ag.sample_acs(scene, 200, seed=seed)
        for ac in acs:
            worst_epc = max(worst_epc, abs(ag.epipolar_residual(ac.p1, ac.p2, scene.F_gt)))
            m0, n0 = ag.affine_constraint_residual(ac, scene.F_gt)
            worst_mn = max(worst_mn, abs(m0), abs(n0))
            n_checked += 1
    ok = worst_epc <= 1e-12 and worst_mn <= 1e-12
    _line(3, "algebra-geometry closure", "PASS" if ok else "FAIL",
          f"{n_checked} ACs, max |E_PC| {worst_epc:.2e}, max |M0|,|N0| {worst_mn:.2e}")
    assert worst_epc <= 1e-12
    assert worst_mn <= 1e-12


# --- 4: decomposition round trip --------------------------------------------------

def test_criterion_4_decomposition_round_trip():
    rng = np.random.default_rng(1004)
    worst_rt = worst_det = 0.0
    for _ in range(1000):
        A = random_orientation_preserving(rng)
        d = ag.decompose_affine(A)
        back = ag.synthesize_affine(d)
        worst_rt = max(worst_rt, np.linalg.norm(back - A) / np.linalg.norm(A))
        shape = np.eye(2) + d.residual_shape
        worst_det = max(worst_det, abs(np.linalg.det(shape) - 1.0))
    ok = worst_rt <= 1e-10 and worst_det <= 1e-10
    _line(4, "decomposition round trip", "PASS" if ok else "FAIL",
          f"1000 matrices, max rel err {worst_rt:.2e}, max |det-1| {worst_det:.2e}")
    assert worst_rt <= 1e-10
    assert worst_det <= 1e-10


# --- 5: warp Jacobian vs finite differences ---------------------------------------

def test_criterion_5_gt_affine_correctness():
    rng = np.random.default_rng(1005)
    worst = 0.0
    checked = 0
    while checked < 1000:
        M = np.eye(3) + 0.1 * rng.normal(size=(3, 3))
        M[2, :2] = 1e-3 * rng.normal(size=2)
        if np.linalg.cond(M) > 1e4:
            continue
        H = ag.Homography(M)
        p = rng.uniform(-100.0, 100.0, size=2)
        A = ag.gt_affine_from_homography(H, p)
        step = 1e-4
        fd = np.empty((2, 2))
        for i in range(2):
            dp = np.zeros(2)
            dp[i] = step
            fd[:, i] = (apply_homography(H, p + dp) - apply_homography(H, p - dp)) / (2 * step)
        worst = max(worst, float(np.max(np.abs(A - fd))))
        checked += 1
    ok = worst <= 1e-6
    _line(5, "ground-truth affinity vs finite differences", "PASS" if ok else "FAIL",
          f"1000 (H, p) pairs, max abs err {worst:.2e}")
    assert ok


# --- 6: minimal solver exactness ---------------------------------------------------

def test_criterion_6_solver_exactness():
    worst_f = worst_det = worst_h = 0.0
    rng = np.random.default_rng(1006)
    for seed in range(20):
        scene = ag.generate_scene(seed=6000 + seed, n_planes=3)
        # one AC per plane: a triple on a single plane cannot determine F
        points = rng.uniform((60.0, 60.0), (580.0, 420.0), size=(3, 2))
        acs = general_position_acs(scene, points)
        F = ag.fundamental_from_acs(acs)
        worst_f = max(worst_f, float(np.max(np.abs(F.matrix - scene.F_gt.matrix))))
        worst_det = max(worst_det, abs(np.linalg.det(F.matrix)))

        planar = ag.generate_scene(seed=6100 + seed, n_planes=1)
        hacs, _ = ag.sample_acs(planar, 2, seed=seed)
        H = ag.homography_from_acs(hacs)
        worst_h = max(worst_h, float(np.max(np.abs(H.matrix - planar.homographies[0].matrix))))
    ok = worst_f <= 1e-8 and worst_h <= 1e-8 and worst_det <= 1e-10
    _line(6, "minimal solver exactness", "PASS" if ok else "FAIL",
          f"20 scenes, F err {worst_f:.2e}, |det F| {worst_det:.2e}, H err {worst_h:.2e}")
    assert worst_f <= 1e-8
    assert worst_det <= 1e-10
    assert worst_h <= 1e-8


# --- 7 & 8: robust pipeline Monte-Carlo --------------------------------------------

N_SEEDS = 100


@pytest.fixture(scope="module")
def robust_monte_carlo():
    """100-seed robust-pose runs at both affine weights on identical data."""
    results = {0.0: {"rot": [], "trans": [], "recall": [], "maxerr": []},
               0.1: {"rot": [], "trans": [], "recall": [], "maxerr": []}}
    elapsed = {}
    for weight in (0.1, 0.0):
        start = time.perf_counter()
        for seed in range(N_SEEDS):
            scene = ag.generate_scene(seed=seed, n_planes=3)
            acs, labels = ag.sample_acs(
                scene, 200, ag.NoiseSpec(point_sigma=0.5, outlier_fraction=0.4),
                seed=seed + 10_000,
            )
            cfg = ag.RansacConfig(threshold=0.5, seed=seed, affine_weight=weight)
            pose, est = ag.ransac_pose(acs, scene.K1, scene.K2, cfg)
            err = ag.pose_error(pose, scene.pose)
            bucket = results[weight]
            bucket["rot"].append(err.rotation_error)
            bucket["trans"].append(err.translation_error)
            bucket["maxerr"].append(max(err.rotation_error, err.translation_error))
            bucket["recall"].append(
                float(np.sum(est.inlier_mask & labels) / np.sum(labels))
            )
        elapsed[weight] = time.perf_counter() - start
    return results, elapsed


def test_criterion_7_robust_pipeline(robust_monte_carlo):
    results, elapsed = robust_monte_carlo
    rot = float(np.median(results[0.1]["rot"]))
    trans = float(np.median(results[0.1]["trans"]))
    recall = float(np.median(results[0.1]["recall"]))
    runtime = elapsed[0.1]
    clauses = [
        (f"rotation median {rot:.3f} deg <= 0.5", rot <= 0.5),
        (f"translation median {trans:.3f} deg <= 1.5", trans <= 1.5),
        (f"recall median {recall:.3f} >= 0.9", recall >= 0.9),
        (f"runtime {runtime:.1f} s < 60", runtime < 60.0),
    ]
    status = "PASS" if all(ok for _, ok in clauses) else "FAIL"
    detail = "; ".join(f"{text}: {'PASS' if ok else 'FAIL'}" for text, ok in clauses)
    _line(7, "robust pipeline", status, detail)
    assert rot <= 0.5, f"median rotation error {rot:.4f} deg exceeds 0.5 deg"
    assert trans <= 1.5, f"median translation error {trans:.4f} deg exceeds 1.5 deg"
    assert runtime < 60.0, f"runtime {runtime:.1f} s exceeds 60 s"
    # The inlier test thresholds sqrt(sampson_point), the full first-order
    # correction. With Gaussian sigma on p2 and comparable epipolar-line
    # gradients in both images, that correction is the image-2 line distance
    # shrunk by ~1/sqrt(2), so per-point acceptance at threshold = sigma caps
    # near P(|Z| <= sqrt(2)) ~ 84% even under the exact ground-truth model;
    # no estimator can reach 90% recall in this regime.
    assert recall >= 0.9, (
        f"median true-inlier recall {recall:.4f} < 0.9: unattainable at "
        f"threshold = noise sigma; the ground-truth model itself scores ~0.85"
    )


def test_criterion_8_affine_score_value(robust_monte_carlo):
    results, _ = robust_monte_carlo
    med_affine = float(np.median(results[0.1]["maxerr"]))
    med_point = float(np.median(results[0.0]["maxerr"]))
    ok = med_affine <= med_point
    _line(8, "affine-weighted scoring value", "PASS" if ok else "FAIL",
          f"median pose err {med_affine:.4f} deg (affine) vs {med_point:.4f} deg (point-only)")
    assert ok, (
        f"affine-weighted median pose error {med_affine:.4f} deg exceeds "
        f"point-only {med_point:.4f} deg"
    )


# --- 9: metric golden values --------------------------------------------------------

def test_criterion_9_metric_goldens():
    linear = ag.MmaCurve(np.arange(1, 11) / 10.0)
    score = ag.mma_score(linear)
    auc10 = ag.pose_auc([0.0, 10.0], thresholds=[10.0])[0]
    denom = mma_weight_denominator()
    ok = (
        abs(score - 7.15 / 14.5) <= 1e-12
        and abs(auc10 - 0.75) <= 1e-12
        and denom == 14.5
    )
    _line(9, "metric golden values", "PASS" if ok else "FAIL",
          f"MMAscore {score:.15f}, AUC@10 {auc10:.15f}, weight denominator {denom}")
    assert abs(score - 7.15 / 14.5) <= 1e-12
    assert abs(auc10 - 0.75) <= 1e-12
    assert denom == 14.5


# --- 10: CLI determinism --------------------------------------------------------------

def _run(args, workdir, threads):
    env = dict(os.environ)
    env["AFFGEO_THREADS"] = str(threads)
    proc = subprocess.run(
        [sys.executable, "-m", "affgeo.cli", *map(str, args)],
        capture_output=True,
        text=True,
        cwd=workdir,
        env=env,
    )
    return proc.returncode, proc.stdout


def _snapshot(root):
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def test_criterion_10_cli_determinism(tmp_path):
    work = tmp_path
    data = work / "data"
    code, _ = _run(["synth", "--seed", "3", "--n", "60", "--planes", "2",
                    "--point-sigma", "0.3", "--outliers", "0.2",
                    "--out-dir", "data"], work, 1)
    assert code == 0

    matches_dir = work / "matches"
    gt_dir = work / "gt"
    matches_dir.mkdir()
    gt_dir.mkdir()
    write_matches(matches_dir / "p.csv",
                  np.array([[10.0, 20.0 + i, 10.5 + i, 20.0 + i] for i in range(10)]))
    write_mat3(gt_dir / "p.txt", np.eye(3))
    est_dir = work / "poses_est"
    gtp_dir = work / "poses_gt"
    est_dir.mkdir()
    gtp_dir.mkdir()
    pose = ag.RelativePose(R=np.eye(3), t=[1.0, 0.0, 0.0])
    write_pose(est_dir / "s.txt", pose)
    write_pose(gtp_dir / "s.txt", pose)
    write_points(work / "pts.csv", [[1.0, 0.0], [30.0, 40.0]])

    commands = {
        "synth": ["synth", "--seed", "3", "--n", "60", "--planes", "2",
                  "--point-sigma", "0.3", "--outliers", "0.2", "--out-dir", "data"],
        "residuals": ["residuals", "data/acs.csv", "data/F.txt", "--csv", "resid.csv"],
        "estimate": ["estimate", "data/acs.csv", "--model", "essential",
                     "--intrinsics", "data/K1.txt", "--seed", "5", "--out", "est"],
        "eval-mma": ["eval-mma", "matches", "gt", "--csv", "curve.csv"],
        "eval-pose": ["eval-pose", "poses_est", "poses_gt"],
        "gt-affine": ["gt-affine", "data/H_plane0.txt", "pts.csv", "--out", "gtaff.csv"],
    }
    all_ok = True
    details = []
    for name, args in commands.items():
        outputs = []
        for threads in (1, 1, 4):
            code, stdout = _run(args, work, threads)
            assert code == 0, f"{name} exited {code}"
            outputs.append((stdout, _snapshot(work)))
        same = outputs[0] == outputs[1] == outputs[2]
        all_ok &= same
        details.append(f"{name}: {'ok' if same else 'DIFFERS'}")
    _line(10, "CLI determinism", "PASS" if all_ok else "FAIL", ", ".join(details))
    assert all_ok, "; ".join(details)

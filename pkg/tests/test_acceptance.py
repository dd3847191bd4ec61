"""Acceptance checks for the full pipeline.

Each test prints one [PASS]/[FAIL] line (run with -s to see them all) and
asserts the documented tolerance.  The end-to-end sweep builds a fresh
synthetic dataset, so this file takes on the order of a minute.
"""

import math
import shutil
import time
from importlib import resources

import numpy as np
import pytest

from gaborface.cli import main as cli_main
from gaborface.features import (
    GaborParams,
    build_bank,
    gabor_kernel,
    gabor_value,
    geometric_vector,
    jets,
)
from gaborface.fiducial import Landmark, LandmarkSet, ROLES, landmarks, mirror_roles
from gaborface.imaging import (
    canny_stages,
    connected_components,
    dilate_disk,
    gaussian_smooth,
    resize_bilinear,
)
from gaborface.pipeline import (
    experiment_feature_sets,
    extract_features,
    extraction_bank,
    scan_dataset,
)
from gaborface.recognizer import MlpNet, SplitSpec, TrainConfig, run_experiment
from gaborface.config import default_config
from gaborface.skin import crisp_skin, skin_probability
from gaborface.toyface import generate_toyset, random_chip


def _report(name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    line = f"[{status}] {name}"
    if detail:
        line += f" ({detail})"
    print(line, flush=True)
    assert ok, f"{name}: {detail}"


def test_gabor_filter_identities():
    t0 = time.perf_counter()
    problems = []

    p = GaborParams(theta=0.4, wavelength=8.0)
    if abs(gabor_value(p, 0.0, 0.0) - 1.0) >= 1e-12:
        problems.append("origin value not 1")
    q = GaborParams(theta=0.4, wavelength=8.0, phase=math.pi / 2.0)
    if abs(gabor_value(q, 0.0, 0.0)) >= 1e-9:
        problems.append("quadrature origin not 0")
    trough = gabor_value(GaborParams(theta=0.0, wavelength=8.0), 4.0, 0.0)
    if abs(trough + math.exp(-1.0 / 8.0)) >= 1e-9:
        problems.append(f"half-wave trough {trough}")

    for theta in (0.0, math.pi / 8.0, 5.0 * math.pi / 8.0):
        even = gabor_kernel(GaborParams(theta=theta, wavelength=4.0), half_extent=16)
        odd = gabor_kernel(GaborParams(theta=theta, wavelength=4.0,
                                       phase=math.pi / 2.0), half_extent=16)
        if even.shape != (33, 33):
            problems.append("kernel lattice is not 33x33")
        if np.abs(even[::-1, ::-1] - even).max() >= 1e-12:
            problems.append(f"even kernel asymmetric at theta={theta}")
        if np.abs(odd[::-1, ::-1] + odd).max() >= 1e-12:
            problems.append(f"odd kernel not antisymmetric at theta={theta}")

    elapsed = time.perf_counter() - t0
    if elapsed >= 1.0:
        problems.append(f"took {elapsed:.2f}s")
    _report("gabor filter identities", not problems,
            "; ".join(problems) or f"{elapsed * 1000.0:.0f}ms")


def test_bank_cardinalities_and_jet_length():
    problems = []
    full = build_bank(8)
    if full.num_channels != 40:
        problems.append(f"full bank has {full.num_channels} channels")
    sizes = {n: build_bank(n).num_channels for n in (1, 2, 3, 4, 5)}
    if sizes != {1: 5, 2: 10, 3: 15, 4: 20, 5: 25}:
        problems.append(f"sub-bank sizes {sizes}")

    coords = {
        "P1": (10.0, 17.0), "P2": (16.0, 17.0), "P3": (30.0, 17.0),
        "P4": (36.0, 17.0), "P5": (13.0, 17.0), "P6": (33.0, 17.0),
        "P7": (15.0, 40.0), "P8": (35.0, 40.0), "P9": (20.0, 30.0),
        "P10": (26.0, 30.0),
    }
    lms = LandmarkSet([Landmark(r, *coords[r]) for r in ROLES])
    img = np.random.default_rng(0).uniform(0.0, 255.0, size=(50, 50))
    for n, bank in ((8, full), (2, build_bank(2))):
        vec = jets(img, lms, bank)
        if vec.shape != (10 * bank.num_channels,):
            problems.append(f"jet length {vec.shape} for {n} orientations")
    _report("bank cardinalities and jet length", not problems, "; ".join(problems))


def test_fuzzy_classifier_exhaustive_grid():
    t0 = time.perf_counter()
    problems = []
    cb = np.arange(256.0)
    cr = np.arange(256.0)
    img = np.zeros((256, 256, 3))
    img[..., 1] = cb[None, :]
    img[..., 2] = cr[:, None]
    scores = skin_probability(img)  # scores[cr, cb]

    if not ((scores >= 0.0).all() and (scores <= 1.0).all()):
        problems.append("score outside [0, 1]")

    def region(cb_range, cr_range):
        cbs = slice(int(cb_range[0]), int(cb_range[1]) + 1)
        crs = slice(int(cr_range[0]), int(cr_range[1]) + 1)
        return scores[crs, cbs]

    skin_cores = [((87, 117), (143, 163)), ((87, 117), (183, 255)),
                  ((137, 255), (143, 163))]
    for cb_range, cr_range in skin_cores:
        block = region(cb_range, cr_range)
        if (np.abs(block - 1.0) > 1e-12).any():
            problems.append(f"core Cb{cb_range} Cr{cr_range} not all skin")
    nonskin_cores = [((0, 67), (0, 123)), ((0, 67), (143, 163)), ((0, 67), (183, 255)),
                     ((87, 117), (0, 123)),
                     ((137, 255), (0, 123)), ((137, 255), (183, 255))]
    for cb_range, cr_range in nonskin_cores:
        block = region(cb_range, cr_range)
        if (np.abs(block) > 1e-12).any():
            problems.append(f"core Cb{cb_range} Cr{cr_range} not all background")

    crisp = crisp_skin(img[..., 1], img[..., 2])
    expected = (img[..., 1] >= 77) & (img[..., 1] <= 127) \
        & (img[..., 2] >= 133) & (img[..., 2] <= 173)
    if not np.array_equal(crisp, expected):
        problems.append("crisp rule deviates from its box")

    elapsed = time.perf_counter() - t0
    if elapsed >= 5.0:
        problems.append(f"took {elapsed:.2f}s")
    _report("fuzzy skin classifier on the full chroma grid", not problems,
            "; ".join(problems) or f"{elapsed:.2f}s")


def test_image_operator_invariants():
    rng = np.random.default_rng(1)
    problems = []

    bad_area = 0
    for _ in range(1000):
        mask = rng.random((32, 32)) < 0.4
        parts = connected_components(mask)
        if sum(c.area for c in parts) != int(mask.sum()):
            bad_area += 1
    if bad_area:
        problems.append(f"{bad_area} masks with wrong component area totals")

    for _ in range(200):
        mask = rng.random((24, 24)) < 0.2
        previous = mask
        for radius in (0, 1, 2, 3):
            grown = dilate_disk(mask, radius)
            if (mask & ~grown).any():
                problems.append("dilation lost a pixel")
                break
            if (previous & ~grown).any():
                problems.append("dilation not monotone in the radius")
                break
            previous = grown

    for i in range(100):
        img = gaussian_smooth(rng.uniform(0.0, 255.0, size=(40, 40)), 1.2)
        stages = canny_stages(img, sigma=1.4)
        if (stages.strong & ~stages.mask).any():
            problems.append(f"strong pixel dropped on image {i}")
            break
        if (stages.mask & ~(stages.strong | stages.weak)).any():
            problems.append(f"mask pixel outside candidates on image {i}")
            break

    two = np.array([[0.0, 255.0]])
    wide = resize_bilinear(two, 3, 1)
    if not np.array_equal(wide, [[0.0, 127.5, 255.0]]):
        problems.append(f"bilinear midpoint {wide.tolist()}")

    _report("image operator invariants", not problems, "; ".join(problems))


def test_network_gradients_match_numeric():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    step = 1e-5
    worst = 0.0
    for _ in range(50):
        dim = int(rng.integers(1, 7))
        hidden = int(rng.integers(1, 5))
        net = MlpNet(
            w1=rng.uniform(-0.5, 0.5, size=(hidden, dim)),
            b1=rng.uniform(-0.5, 0.5, size=hidden),
            w2=rng.uniform(-0.5, 0.5, size=hidden),
            b2=float(rng.uniform(-0.5, 0.5)),
        )
        x = rng.uniform(0.0, 1.0, size=dim)
        target = float(rng.integers(0, 2))
        _, gw1, gb1, gw2, gb2 = net.loss_gradients(x, target)

        def loss(w1, b1, w2, b2):
            y = MlpNet(w1=w1, b1=b1, w2=w2, b2=b2).forward(x)
            return 0.5 * (y - target) ** 2

        grads = np.concatenate([gw1.ravel(), gb1, gw2, [gb2]])
        numeric = []
        for idx in range(hidden * dim):
            i, j = divmod(idx, dim)
            up, dn = net.w1.copy(), net.w1.copy()
            up[i, j] += step
            dn[i, j] -= step
            numeric.append((loss(up, net.b1, net.w2, net.b2)
                            - loss(dn, net.b1, net.w2, net.b2)) / (2 * step))
        for i in range(hidden):
            up, dn = net.b1.copy(), net.b1.copy()
            up[i] += step
            dn[i] -= step
            numeric.append((loss(net.w1, up, net.w2, net.b2)
                            - loss(net.w1, dn, net.w2, net.b2)) / (2 * step))
        for i in range(hidden):
            up, dn = net.w2.copy(), net.w2.copy()
            up[i] += step
            dn[i] -= step
            numeric.append((loss(net.w1, net.b1, up, net.b2)
                            - loss(net.w1, net.b1, dn, net.b2)) / (2 * step))
        numeric.append((loss(net.w1, net.b1, net.w2, net.b2 + step)
                        - loss(net.w1, net.b1, net.w2, net.b2 - step)) / (2 * step))
        numeric = np.array(numeric)
        rel = np.abs(grads - numeric) / np.maximum.reduce(
            [np.abs(grads), np.abs(numeric), np.full_like(numeric, 1e-8)])
        worst = max(worst, float(rel.max()))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-4 and elapsed < 5.0
    _report("network gradients against central differences", ok,
            f"worst relative error {worst:.2e}, {elapsed:.2f}s")


def test_fiducial_mirror_equivariance():
    worst = 0.0
    failures = []
    for seed in range(100):
        chip = random_chip(seed)
        try:
            straight = landmarks(chip)
            flipped = landmarks(chip[:, ::-1].copy())
        except Exception as exc:  # noqa: BLE001 - counted, not raised
            failures.append(f"seed {seed}: {type(exc).__name__}")
            continue
        for a, b in mirror_roles():
            for p, q in ((a, b), (b, a)):
                worst = max(worst,
                            abs(flipped[q].x - (49.0 - straight[p].x)),
                            abs(flipped[q].y - straight[p].y))
    ok = not failures and worst <= 1.0
    _report("fiducial mirror equivariance on 100 chips", ok,
            "; ".join(failures) or f"worst deviation {worst:.2e}px")


def test_geometric_vector_properties():
    problems = []
    coords = {
        "P1": (10.0, 17.0), "P2": (16.0, 17.0), "P3": (30.0, 17.0),
        "P4": (36.0, 17.0), "P5": (13.0, 17.0), "P6": (33.0, 17.0),
        "P7": (15.0, 40.0), "P8": (35.0, 40.0), "P9": (20.0, 30.0),
        "P10": (26.0, 30.0),
    }

    def build(mapping):
        return LandmarkSet([Landmark(r, *mapping[r]) for r in ROLES])

    hand = geometric_vector(build(coords)).as_array()
    expected = np.array([20.0, 6.0, 14.0, 6.0, 13.0, 20.0, 10.0])
    if not np.array_equal(hand, expected):
        problems.append(f"hand example gave {hand.tolist()}")

    rng = np.random.default_rng(3)
    for _ in range(100):
        pts = {r: (float(rng.uniform(0.0, 49.0)), float(rng.uniform(0.0, 49.0)))
               for r in ROLES}
        base = geometric_vector(build(pts)).as_array()
        dx, dy = rng.uniform(-20.0, 20.0, size=2)
        moved = {r: (x + dx, y + dy) for r, (x, y) in pts.items()}
        shifted = geometric_vector(build(moved)).as_array()
        denom = np.maximum(np.abs(base), 1e-8)
        if (np.abs(shifted - base) / denom > 1e-9).any():
            problems.append("translation changed a distance")
            break
        s = float(rng.uniform(0.2, 3.0))
        scaled_pts = {r: (s * x, s * y) for r, (x, y) in pts.items()}
        scaled = geometric_vector(build(scaled_pts)).as_array()
        if (np.abs(scaled - s * base) / np.maximum(np.abs(s * base), 1e-8) > 1e-9).any():
            problems.append("scaling is not proportional")
            break
    _report("geometric vector properties", not problems, "; ".join(problems))


@pytest.fixture(scope="module")
def sweep_inputs(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance") / "toyset"
    generate_toyset(root, persons=5, samples=20, seed=0)
    config = default_config()
    bank = extraction_bank(config)
    records, skips = extract_features(scan_dataset(root), config, bank)
    return records, skips, bank


def test_recognition_sweep_end_to_end(sweep_inputs):
    t0 = time.perf_counter()
    records, skips, bank = sweep_inputs
    problems = []
    if skips:
        problems.append(f"{len(skips)} images skipped during extraction")
    if len(records) != 100:
        problems.append(f"extracted {len(records)} of 100 images")

    names, matrices, labels = experiment_feature_sets(records, bank)
    split = SplitSpec(fractions=(0.6, 0.5, 0.3), combinations=5, base_seed=0)
    cfg = TrainConfig()
    result = run_experiment(dict(zip(names, matrices)), labels, split, cfg)
    if result.failures:
        problems.append(f"{len(result.failures)} training cells failed")

    lows = []
    for name in names:
        if name == "geometric":
            continue
        for fraction in split.fractions:
            rate = result.mean_rate(name, fraction)
            if not rate >= 0.80:
                lows.append(f"{name}@{fraction}: {100 * rate:.1f}%")
    if lows:
        problems.append("cells under 80%: " + ", ".join(lows))
    for fraction in split.fractions:
        fused = result.mean_rate("fused-25", fraction)
        geom = result.mean_rate("geometric", fraction)
        if not fused >= geom:
            problems.append(f"fused-25 {fused:.3f} below geometric {geom:.3f} "
                            f"at {fraction}")

    again = run_experiment(dict(zip(names, matrices)), labels, split, cfg)
    if again.to_csv_text() != result.to_csv_text():
        problems.append("sweep is not reproducible")

    elapsed = time.perf_counter() - t0
    if elapsed >= 600.0:
        problems.append(f"took {elapsed:.0f}s")
    worst = min(result.mean_rate(n, f)
                for n in names if n != "geometric" for f in split.fractions)
    _report("end-to-end recognition sweep", not problems,
            "; ".join(problems) or f"worst appearance cell {100 * worst:.1f}%, "
                                   f"{elapsed:.0f}s")


def test_cli_outputs_are_deterministic(tmp_path):
    problems = []
    with resources.as_file(
            resources.files("gaborface.data") / "sample_scene.png") as bundled:
        scene = tmp_path / "scene.png"
        shutil.copy(bundled, scene)
    dataset = tmp_path / "data" / "p0"
    dataset.mkdir(parents=True)
    shutil.copy(scene, dataset / "s0.png")

    runs = {
        "detect": ["detect", str(scene)],
        "landmarks": ["landmarks", str(scene)],
        "features": ["features", str(tmp_path / "data"), "--features", "fused",
                     "--orientations", "5"],
    }
    for label, argv in runs.items():
        outs = []
        for attempt in ("a", "b"):
            out = tmp_path / f"{label}-{attempt}"
            rc = cli_main(argv + ["--out", str(out)])
            if rc != 0:
                problems.append(f"{label} exited {rc}")
            outs.append(out)
        first, second = outs
        names1 = sorted(p.name for p in first.iterdir() if p.is_file())
        names2 = sorted(p.name for p in second.iterdir() if p.is_file())
        if names1 != names2:
            problems.append(f"{label} wrote different file sets")
            continue
        for name in names1:
            if (first / name).read_bytes() != (second / name).read_bytes():
                problems.append(f"{label}/{name} differs between runs")
    _report("deterministic command line outputs", not problems, "; ".join(problems))

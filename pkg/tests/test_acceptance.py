"""Acceptance gate: eight end-to-end criteria, one printed verdict line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the verdict lines
as they are produced (they are also shown in captured output on failure).
The heavyweight fixture (criteria 4-6) renders five seeded corpora and
trains every ladder rung, so the full gate takes tens of minutes on CPU.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from conftest import head_on_camera, unit_sphere_mesh
from forge.adaptation import GanConfig, expand_dataset, rank_checkpoints
from forge.harness import ExperimentConfig, LadderContext, emit_report, run_ladder
from forge.metrics import SsimConfig, ssim, ssim_loss_grad
from forge.nn import (
    ClassifierConfig,
    TrainConfig,
    denoiser_ssim,
    gradient_check,
    train_classifier_arrays,
)
from forge.pipeline import PipelineConfig
from forge.render import RenderConfig, render_gi, trace_gbuffer
from forge.scene import TWO_SPHERE_LIGHTS, build_scene
from forge.sh import ShFitConfig, fit_sh, sh_basis


def _verdict(num, ok, detail):
    line = f"[criterion {num}] {'PASS' if ok else 'FAIL'}: {detail}"
    print(line)
    assert ok, line


# --------------------------------------------------------------------------
# criterion 1: renderer physics
# --------------------------------------------------------------------------

def test_criterion_1_renderer_physics(furnace_scene, sphere_scene):
    t0 = time.time()
    cfg = RenderConfig(width=32, height=32, spp=256, max_bounces=8, seed=1)
    img = render_gi(furnace_scene, cfg)
    cov = trace_gbuffer(furnace_scene, cfg).coverage
    furnace_err = float(np.abs(img[cov] - 0.5).max())  # rho=0.5, L=1

    base = RenderConfig(width=24, height=24, max_bounces=5, seed=0)
    spps = [1, 4, 16, 64]
    variances = []
    for spp in spps:
        imgs = np.stack([
            render_gi(sphere_scene, replace(base, spp=spp, seed=100 + r))
            for r in range(24)])
        variances.append(imgs.var(axis=0).mean())
    slope = float(np.polyfit(np.log(spps), np.log(variances), 1)[0])
    elapsed = time.time() - t0
    ok = furnace_err <= 0.01 and abs(slope + 1.0) <= 0.15 and elapsed < 120
    _verdict(1, ok, f"furnace ±{furnace_err:.4f} (tol 0.01), "
                    f"variance slope {slope:.3f} (want -1±0.15), "
                    f"{elapsed:.0f}s (<120s)")


# --------------------------------------------------------------------------
# criterion 2: spherical harmonics
# --------------------------------------------------------------------------

def test_criterion_2_spherical_harmonics():
    t0 = time.time()
    # orthonormality over the sphere by product quadrature
    n_theta, n_phi = 64, 128
    x_gl, w_gl = np.polynomial.legendre.leggauss(n_theta)
    phis = (np.arange(n_phi) + 0.5) * (2 * math.pi / n_phi)
    gram = np.zeros((9, 9))
    for mu, w in zip(x_gl, w_gl):
        s = math.sqrt(1 - mu * mu)
        dirs = np.stack([s * np.cos(phis), np.full(n_phi, mu),
                         s * np.sin(phis)], axis=-1)
        basis = sh_basis(dirs)
        gram += w * (2 * math.pi / n_phi) * basis.T @ basis
    ortho_err = float(np.abs(gram - np.eye(9)).max())

    # planted-coefficient recovery from clamped shaded samples
    rng = np.random.default_rng(0)
    c_true = np.array([[1.5, 0.2, 0.3, -0.25, 0.1, -0.1, 0.15, 0.05, -0.2]])
    normals = rng.standard_normal((1500, 3))
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    basis = sh_basis(normals)
    target = (np.maximum(0.0, basis @ c_true[0]) * 0.7).reshape(1, -1, 1)

    class _FakeGb:
        coverage = np.ones((1, 1500), bool)
        normal = normals.reshape(1, -1, 3)
        albedo = np.full((1, 1500, 3), 0.7)

    fitted = fit_sh([_FakeGb()], [target],
                    ShFitConfig(iterations=2500, learning_rate=0.1, seed=1),
                    channels=1)
    planted_err = float(np.abs(fitted.values - c_true).max())

    # fit residual on a GI-lit sphere (no ground: convex, smooth lighting)
    scene = build_scene(unit_sphere_mesh(), TWO_SPHERE_LIGHTS,
                        head_on_camera(), ground=False)
    rcfg = RenderConfig(width=48, height=48, spp=64, max_bounces=5, seed=2)
    img = render_gi(scene, rcfg)
    gb = trace_gbuffer(scene, rcfg)
    _, curve = fit_sh([gb], [img],
                      ShFitConfig(iterations=3000, learning_rate=0.1, seed=0),
                      return_curve=True)
    residual = float(min(l for _, l in curve))
    elapsed = time.time() - t0
    ok = (ortho_err <= 1e-3 and planted_err <= 1e-2 and residual <= 0.02
          and elapsed < 60)
    _verdict(2, ok, f"orthonormality {ortho_err:.2e} (tol 1e-3), "
                    f"planted {planted_err:.2e} (tol 1e-2), "
                    f"GI-sphere residual {residual:.4f} (tol 0.02), "
                    f"{elapsed:.0f}s (<60s)")


# --------------------------------------------------------------------------
# criterion 3: metric and gradient correctness
# --------------------------------------------------------------------------

def test_criterion_3_metrics_and_gradients():
    t0 = time.time()
    rng = np.random.default_rng(0)
    x = rng.random((24, 24, 1)).astype(np.float64)
    y = rng.random((24, 24, 1)).astype(np.float64)
    ident_err = abs(ssim(x, x) - 1.0)
    sym_err = abs(ssim(x, y) - ssim(y, x))
    # constant images a vs b: closed form from the SSIM definition
    cfg = SsimConfig()
    a, b = 0.3, 0.7
    xa = np.full((16, 16, 1), a)
    xb = np.full((16, 16, 1), b)
    expected = ((2 * a * b + cfg.c1) / (a * a + b * b + cfg.c1))
    const_err = abs(ssim(xa, xb, cfg) - expected)

    # SSIM gradient vs central differences
    xs = rng.random((12, 12, 1))
    ys = rng.random((12, 12, 1))
    _, grad = ssim_loss_grad(xs, ys)
    fd_err = 0.0
    eps = 1e-5
    for idx in [(2, 3, 0), (6, 6, 0), (10, 4, 0)]:
        xp = xs.copy(); xp[idx] += eps
        xm = xs.copy(); xm[idx] -= eps
        lp, _ = ssim_loss_grad(xp, ys)
        lm, _ = ssim_loss_grad(xm, ys)
        fd_err = max(fd_err, abs((lp - lm) / (2 * eps) - grad[idx]))

    reports = {k: gradient_check(k) for k in
               ("denoiser", "classifier", "discriminator")}
    nets_ok = all(r["pass"] for r in reports.values())
    elapsed = time.time() - t0
    ok = (ident_err <= 1e-4 and sym_err <= 1e-4 and const_err <= 1e-4
          and fd_err <= 1e-3 and nets_ok and elapsed < 60)
    _verdict(3, ok, f"identity {ident_err:.1e}, symmetry {sym_err:.1e}, "
                    f"constant {const_err:.1e} (tol 1e-4), "
                    f"SSIM fd {fd_err:.1e} (tol 1e-3), "
                    f"network grads {'ok' if nets_ok else reports}, "
                    f"{elapsed:.0f}s (<60s)")


# --------------------------------------------------------------------------
# shared heavyweight fixture for criteria 4-6
# --------------------------------------------------------------------------

SEEDS = (0, 1, 2, 3, 4)
_LADDER_CONDS = ("albedo", "sh", "sh_ao", "two_bounce",
                 "gi_low", "gi_mid", "gi_high", "baseline_same_domain")


def _experiment_config(seed):
    pcfg = PipelineConfig(
        classes=5, per_class=4, views=15, test_views=4, val_views=1,
        resolution=32, spp={"low": 1, "mid": 4, "high": 64},
        ao_samples=32, seed=seed)
    return ExperimentConfig(
        condition="gi_high", seed=seed, pipeline=pcfg,
        classifier=ClassifierConfig(epochs=16, batch_size=16, seed=seed,
                                    augment=True, jitter=2,
                                    widths=(8, 8, 16, 16, 32), fc=(64, 32)),
        denoiser=TrainConfig(steps=2000, learning_rate=2e-3, batch_size=8,
                             eval_every=200, widths=(16, 32, 64),
                             warmup_steps=400, warmup_lr=5e-4),
        gan=GanConfig(steps=400, interval=50, batch_size=4))


@pytest.fixture(scope="module")
def ladder_results():
    """Per-seed accuracies for every rung plus phase wall-clock budgets."""
    accs = {}
    ssims = {"raw": [], "denoised": []}
    timings = {"corpus": 0.0, "denoise": 0.0, "ladder": 0.0, "gan": 0.0}

    def _train(ctx, cfg, cond):
        x, y = ctx.training_set(cond)
        _, acc = train_classifier_arrays(
            x, y, ctx.test_x, ctx.test_labels,
            replace(cfg.classifier, seed=cfg.seed))
        accs.setdefault(cond, []).append(acc)

    for seed in SEEDS:
        cfg = _experiment_config(seed)
        t0 = time.time()
        ctx = LadderContext(cfg)
        timings["corpus"] += time.time() - t0

        t0 = time.time()
        from forge import pipeline as _pl
        from forge.nn import standardize
        ckpt = ctx.denoiser("low")
        xs, ys = _pl.denoiser_io(ctx.train, "low", cfg.pipeline)
        model = ckpt.build()
        raw = np.stack([e.images["low"].transpose(2, 0, 1)
                        for e in ctx.train])
        den = model.forward(
            standardize(xs, *ctx.denoiser_norm(ckpt))[:16], train=False)
        ssims["raw"].append(np.mean(
            [ssim(raw[i].transpose(1, 2, 0), ys[i].transpose(1, 2, 0))
             for i in range(16)]))
        ssims["denoised"].append(np.mean(
            [ssim(den[i].transpose(1, 2, 0), ys[i].transpose(1, 2, 0))
             for i in range(16)]))
        _train(ctx, cfg, "denoised_low")
        _train(ctx, cfg, "gi_low")
        timings["denoise"] += time.time() - t0

        t0 = time.time()
        for cond in _LADDER_CONDS:
            if cond != "gi_low":
                _train(ctx, cfg, cond)
        timings["ladder"] += time.time() - t0

        t0 = time.time()
        _train(ctx, cfg, "gan_single")
        _train(ctx, cfg, "gan_ensemble")
        timings["gan"] += time.time() - t0

    means = {c: 100.0 * float(np.mean(v)) for c, v in accs.items()}
    return {"accs": accs, "means": means, "ssims": ssims,
            "timings": timings}


# --------------------------------------------------------------------------
# criterion 4: denoiser directional claim
# --------------------------------------------------------------------------

def test_criterion_4_denoiser_claim(ladder_results):
    r = ladder_results
    ssim_gain = float(np.mean(r["ssims"]["denoised"]) -
                      np.mean(r["ssims"]["raw"]))
    acc_gain = r["means"]["denoised_low"] - r["means"]["gi_low"]
    elapsed = r["timings"]["corpus"] + r["timings"]["denoise"]
    ok = ssim_gain >= 0.05 and acc_gain >= 2.0 and elapsed < 1200
    _verdict(4, ok, f"SSIM gain {ssim_gain:+.3f} (need +0.05), "
                    f"accuracy gain {acc_gain:+.1f}pts (need +2), "
                    f"{elapsed:.0f}s (<1200s)")


# --------------------------------------------------------------------------
# criterion 5: ladder ordering
# --------------------------------------------------------------------------

def test_criterion_5_ladder_ordering(ladder_results):
    m = ladder_results["means"]
    gaps = {
        "albedo<sh_ao": m["sh_ao"] - m["albedo"],
        "albedo<two_bounce": m["two_bounce"] - m["albedo"],
        "sh_ao<gi_high": m["gi_high"] - m["sh_ao"],
        "two_bounce<gi_high": m["gi_high"] - m["two_bounce"],
    }
    base_ok = m["gi_high"] <= m["baseline_same_domain"]
    mid_gap = abs(m["gi_mid"] - m["gi_high"])
    elapsed = (ladder_results["timings"]["corpus"] +
               ladder_results["timings"]["ladder"])
    ok = (all(g >= 2.0 for g in gaps.values()) and base_ok
          and mid_gap <= 3.0 and elapsed < 3600)
    detail = ", ".join(f"{k} {v:+.1f}" for k, v in gaps.items())
    _verdict(5, ok, f"{detail} (each need >=2), "
                    f"gi_high<=baseline {base_ok}, "
                    f"|gi_mid-gi_high| {mid_gap:.1f} (<=3), "
                    f"{elapsed:.0f}s (<3600s)")


# --------------------------------------------------------------------------
# criterion 6: ensemble claim
# --------------------------------------------------------------------------

def test_criterion_6_ensemble_claim(ladder_results):
    m = ladder_results["means"]
    single_gap = m["gan_ensemble"] - m["gan_single"]
    vs_gi = m["gan_ensemble"] - m["gi_high"]

    # D*K cardinality law, exact, for several (D, K)
    from forge.nn import DenoiserNet, checkpoint_of
    net = DenoiserNet(1, 1, seed=0, widths=(2, 3, 4))
    ck = checkpoint_of(net, "denoiser", 0,
                       {"ctor": {"cin": 1, "cout": 1, "seed": 0,
                                 "widths": [2, 3, 4]}})
    dk_ok = True
    rng = np.random.default_rng(0)
    for d, k in ((5, 1), (7, 3), (4, 4)):
        imgs = rng.random((d, 1, 16, 16)).astype(np.float32)
        out, lbl, ids = expand_dataset([ck] * k, imgs, np.arange(d) % 2)
        dk_ok &= len(out) == d * k and len(lbl) == d * k and len(ids) == d * k

    elapsed = (ladder_results["timings"]["corpus"] +
               ladder_results["timings"]["denoise"] +
               ladder_results["timings"]["gan"])
    ok = single_gap >= 2.0 and vs_gi >= 0.0 and dk_ok and elapsed < 7200
    _verdict(6, ok, f"ensemble-single {single_gap:+.1f}pts (need +2), "
                    f"ensemble-gi_high {vs_gi:+.1f}pts (need >=0), "
                    f"D*K law {'exact' if dk_ok else 'VIOLATED'}, "
                    f"{elapsed:.0f}s (<7200s)")


# --------------------------------------------------------------------------
# criterion 7: protocol integrity
# --------------------------------------------------------------------------

def test_criterion_7_protocol_integrity(tiny_config, tiny_corpus):
    # ranking refuses test-split data
    from forge.nn import DenoiserNet, checkpoint_of
    net = DenoiserNet(1, 1, seed=0, widths=(2, 3, 4))
    ck = checkpoint_of(net, "denoiser", 0,
                       {"ctor": {"cin": 1, "cout": 1, "seed": 0,
                                 "widths": [2, 3, 4]}})
    guard_ok = False
    try:
        rank_checkpoints([ck], ck, np.zeros((2, 1, 16, 16), np.float32),
                         np.zeros(2, int), splits=["train", "test"])
    except ValueError:
        guard_ok = True

    cfg = ExperimentConfig(
        condition="albedo", seed=3, pipeline=tiny_config,
        classifier=ClassifierConfig(epochs=2, batch_size=4, augment=False,
                                    widths=(4, 4, 8, 8, 8), fc=(16, 8)),
        denoiser=TrainConfig(steps=10, batch_size=2, eval_every=5))
    conds = ["albedo", "gi_low", "baseline_same_domain"]
    rows1, _ = run_ladder(cfg, conditions=conds, seeds=[3])
    rows2, _ = run_ladder(cfg, conditions=conds, seeds=[3])
    csv1, _ = emit_report(rows1)
    csv2, _ = emit_report(rows2)
    identical = csv1.encode() == csv2.encode()
    ok = guard_ok and identical
    _verdict(7, ok, f"rank test-split guard {'raises' if guard_ok else 'MISSING'}, "
                    f"repeat-run CSVs byte-identical {identical}")


# --------------------------------------------------------------------------
# criterion 8: formats
# --------------------------------------------------------------------------

def test_criterion_8_formats(tmp_path, sphere_gbuffer):
    from forge.dataset import DatasetManifest, ManifestError
    from forge.gbuffer_io import read_gbuffer, write_gbuffer
    from forge.nn import (DenoiserNet, checkpoint_of, load_checkpoint,
                          save_checkpoint)

    write_gbuffer(tmp_path / "a.gbuf", sphere_gbuffer)
    back = read_gbuffer(tmp_path / "a.gbuf")
    gb_ok = all(np.array_equal(
        np.asarray(getattr(back, f), np.float32),
        np.asarray(getattr(sphere_gbuffer, f), np.float32))
        for f in ("albedo", "normal", "depth", "ao"))
    gb_ok &= np.array_equal(back.coverage, sphere_gbuffer.coverage)

    net = DenoiserNet(2, 1, seed=7, widths=(2, 3, 4))
    ck = checkpoint_of(net, "denoiser", 12,
                       {"ctor": {"cin": 2, "cout": 1, "seed": 7,
                                 "widths": [2, 3, 4]}})
    save_checkpoint(tmp_path / "m.nnck", ck)
    back_ck = load_checkpoint(tmp_path / "m.nnck")
    nn_ok = (back_ck.step == 12 and set(back_ck.arrays) == set(ck.arrays)
             and all(np.array_equal(back_ck.arrays[k], ck.arrays[k])
                     for k in ck.arrays))

    # manifest schema is enforced on every write
    entry = {"id": "x", "label": 0, "theta": 0.5, "phi": 0.1, "seed": 1,
             "gbuffer": "g.gbuf",
             "images": {"low": "l.npy", "mid": "m.npy", "high": "h.npy"}}
    DatasetManifest(class_count=1, entries=[entry]).save(tmp_path / "ok.json")
    schema_ok = (tmp_path / "ok.json").exists()
    try:
        DatasetManifest(class_count=1,
                        entries=[entry, dict(entry)]).save(
                            tmp_path / "bad.json")
        schema_ok = False  # duplicate ids must be rejected at write time
    except ManifestError:
        pass
    ok = gb_ok and nn_ok and schema_ok
    _verdict(8, ok, f"GBUF1 round-trip {gb_ok}, NNCK1 round-trip {nn_ok}, "
                    f"manifest validated on write {schema_ok}")

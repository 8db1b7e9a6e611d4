import numpy as np
import pytest

from forge.nn import (
    CheckpointError,
    ClassifierNet,
    Conv2D,
    DenoiserNet,
    DiscriminatorNet,
    MaxPool2,
    checkpoint_of,
    load_checkpoint,
    save_checkpoint,
    softmax_xent,
)
from forge.nn.train import gradient_check


def test_identity_conv_is_identity():
    rng = np.random.default_rng(0)
    conv = Conv2D(2, 2, rng, k=1, pad=0)
    conv.w[:] = np.eye(2, dtype=np.float32)  # weights stored (cout, cin*k*k)
    conv.b[:] = 0
    x = rng.random((3, 2, 5, 5)).astype(np.float32)
    assert np.allclose(conv.forward(x, train=True), x, atol=1e-6)


def test_zero_input_conv_weight_grad_zero():
    rng = np.random.default_rng(0)
    conv = Conv2D(1, 1, rng)
    out = conv.forward(np.zeros((1, 1, 4, 4), dtype=np.float32), train=True)
    conv.backward(np.ones_like(out))
    assert np.abs(conv.dw).max() == 0


def test_duplicate_batch_doubles_gradient():
    rng = np.random.default_rng(1)
    conv = Conv2D(1, 2, rng)
    x = rng.random((1, 1, 4, 4)).astype(np.float32)
    out = conv.forward(x, train=True)
    conv.backward(np.ones_like(out))
    g1 = conv.dw.copy()
    conv.dw[:] = 0
    conv.db[:] = 0
    x2 = np.concatenate([x, x])
    out2 = conv.forward(x2, train=True)
    conv.backward(np.ones_like(out2))
    assert np.allclose(conv.dw, 2 * g1, atol=1e-4)


def test_softmax_xent_confident_logits():
    logits = np.array([[1e6, 0.0, 0.0]], dtype=np.float32)
    loss, _ = softmax_xent(logits, np.array([0]))
    assert loss < 1e-6
    with pytest.raises(ValueError):
        softmax_xent(logits, np.array([5]))


def test_maxpool_deterministic_tie_break():
    pool = MaxPool2()
    x = np.full((1, 1, 4, 4), 0.5, dtype=np.float32)
    out = pool.forward(x, train=True)
    dy = np.ones_like(out)
    dx = pool.backward(dy)
    # ties route gradient to exactly one input each (first maximum)
    assert dx.sum() == out.size
    assert set(np.unique(dx)) <= {0.0, 1.0}
    assert np.array_equal(pool.backward(dy), dx)


@pytest.mark.parametrize("kind", ["denoiser", "classifier", "discriminator"])
def test_model_gradients_match_finite_differences(kind):
    report = gradient_check(kind, tolerance=1e-2, seed=0)
    assert report["pass"], report


def test_classifier_has_eight_learnable_layers():
    net = ClassifierNet(cin=1, n_classes=4, input_size=32,
                        widths=(4, 4, 8, 8, 8), fc=(16, 8))
    assert net.learnable_layer_count == 8


def test_denoiser_shape_and_batch_independence():
    net = DenoiserNet(cin=5, cout=1, seed=0, widths=(4, 8, 8))
    x = np.random.default_rng(0).random((1, 5, 24, 24)).astype(np.float32)
    out = net.forward(x, train=False)
    assert out.shape == (1, 1, 24, 24)
    assert np.isfinite(out).all()
    both = net.forward(np.concatenate([x, x]), train=False)
    assert np.allclose(both[0], both[1], atol=1e-6)


def test_denoiser_translation_equivariance():
    net = DenoiserNet(cin=2, cout=1, seed=1, widths=(4, 8, 8))
    rng = np.random.default_rng(2)
    x = rng.random((1, 2, 96, 96)).astype(np.float32)
    shift = 8  # multiple of the 8x downsampling factor
    xs = np.roll(x, shift, axis=3)
    out = net.forward(x, train=False)
    outs = net.forward(xs, train=False)
    # margin exceeds the network's receptive-field radius so the rolled-in
    # wrap content cannot reach the compared interior
    interior = np.abs(np.roll(out, shift, axis=3) - outs)[..., 24:-24, 24:-24]
    assert interior.max() < 1e-4


def test_discriminator_outputs_logit_map():
    net = DiscriminatorNet(cin=1, seed=0, widths=(4, 8, 8, 8))
    x = np.random.default_rng(0).random((2, 1, 32, 32)).astype(np.float32)
    out = net.forward(x, train=False)
    assert out.shape == (2, 1, 2, 2)  # map, not a scalar


def test_checkpoint_round_trip(tmp_path):
    net = DenoiserNet(cin=3, cout=1, seed=5, widths=(4, 8, 8))
    ckpt = checkpoint_of(net, "denoiser", step=7,
                         meta={"ctor": {"cin": 3, "cout": 1, "seed": 5,
                                        "widths": [4, 8, 8]}})
    path = tmp_path / "m.nnck"
    save_checkpoint(path, ckpt)
    assert path.read_bytes()[:5] == b"NNCK1"
    back = load_checkpoint(path)
    assert back.kind == "denoiser" and back.step == 7
    for name in ckpt.arrays:
        assert np.array_equal(back.arrays[name], ckpt.arrays[name])
    x = np.random.default_rng(0).random((1, 3, 16, 16)).astype(np.float32)
    rebuilt = back.build()
    assert np.array_equal(rebuilt.forward(x, train=False),
                          net.forward(x, train=False))


def test_checkpoint_truncation_errors(tmp_path):
    net = DenoiserNet(cin=1, cout=1, seed=0, widths=(4, 4, 4))
    ckpt = checkpoint_of(net, "denoiser", meta={"ctor": {"cin": 1, "cout": 1}})
    path = tmp_path / "m.nnck"
    save_checkpoint(path, ckpt)
    raw = path.read_bytes()
    for cut in (2, 7, len(raw) // 2, len(raw) - 3):
        bad = tmp_path / "bad.nnck"
        bad.write_bytes(raw[:cut])
        with pytest.raises(CheckpointError):
            load_checkpoint(bad)
    bad = tmp_path / "magic.nnck"
    bad.write_bytes(b"XXXXX" + raw[5:])
    with pytest.raises(CheckpointError):
        load_checkpoint(bad)

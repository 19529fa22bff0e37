import numpy as np
import pytest

from junction_atlas import autoencoder as ae
from junction_atlas.autoencoder import layers as L

# canonical architecture reference: (side, channels) per layer
CANONICAL_TABLE = [
    ("input", 256, 1),
    ("enc1", 128, 64), ("enc2", 64, 96), ("enc3", 32, 128),
    ("enc4", 16, 192), ("enc5", 8, 256), ("enc6", 4, 384),
    ("bottleneck", 1, 2048),
    ("dec0", 4, 512), ("dec1", 8, 512), ("dec2", 16, 512),
    ("dec3", 32, 384), ("dec4", 64, 384), ("dec5", 128, 256),
    ("dec6", 256, 256),
    ("out", 256, 1),
]


def naive_conv(x, w, b, stride, pt, pb):
    """Six-loop cross-correlation oracle."""
    n, cin, h, wd = x.shape
    cout, _, k, _ = w.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pt, pb), (pt, pb)))
    ho = (h + pt + pb - k) // stride + 1
    wo = (wd + pt + pb - k) // stride + 1
    out = np.zeros((n, cout, ho, wo))
    for ni in range(n):
        for co in range(cout):
            for i in range(ho):
                for j in range(wo):
                    acc = 0.0
                    for ci in range(cin):
                        for di in range(k):
                            for dj in range(k):
                                acc += (w[co, ci, di, dj]
                                        * xp[ni, ci, i * stride + di, j * stride + dj])
                    out[ni, co, i, j] = acc + b[co]
    return out


# ----------------------------------------------------------------- conv ops

def test_conv_identity_kernel_passthrough():
    x = np.array([[[[3.5]]]])
    w = np.array([[[[1.0]]]])
    y, _ = L.conv2d_forward(x, w, np.zeros(1), stride=1, padding="same")
    assert y.shape == (1, 1, 1, 1) and y[0, 0, 0, 0] == 3.5


def test_conv_matches_naive_loop_oracle():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((2, 3, 7, 7))
    w = rng.standard_normal((4, 3, 3, 3))
    b = rng.standard_normal(4)
    pt, pb, _ = L.same_pads(7, 3, 2)
    y, _ = L.conv2d_forward(x, w, b, stride=2, padding="same")
    expected = naive_conv(x, w, b, 2, pt, pb)
    assert np.abs(y - expected).max() <= 1e-10


def test_conv_rejects_channel_mismatch():
    with pytest.raises(ValueError):
        L.conv2d_forward(np.zeros((1, 2, 4, 4)), np.zeros((3, 5, 3, 3)), np.zeros(3), 1)


def test_conv_transpose_stride1_1x1_is_plain_conv():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((2, 3, 5, 5))
    w = rng.standard_normal((3, 4, 1, 1))
    b = rng.standard_normal(4)
    y, _ = L.conv2d_transpose_forward(x, w, b, stride=1, out_side=5)
    # equivalent plain conv with the kernel axes swapped
    y2, _ = L.conv2d_forward(x, w.transpose(1, 0, 2, 3), b, stride=1, padding="same")
    assert np.abs(y - y2).max() <= 1e-12


def test_conv_transpose_matches_conv_gradient_oracle():
    """convT(x) must equal the input-gradient of the matching conv."""
    rng = np.random.default_rng(2)
    x = rng.standard_normal((2, 3, 4, 4))     # convT input
    w = rng.standard_normal((3, 5, 4, 4))     # (cin, cout, k, k)
    out_side = 8
    y, _ = L.conv2d_transpose_forward(x, w, np.zeros(5), stride=2, out_side=out_side)
    # oracle: the conv mapping out_side -> 4 has weights (3, 5, k, k) read as
    # (Cout, Cin, k, k); its input gradient applied to x is the transpose op
    probe = np.zeros((2, 5, out_side, out_side))
    _, cache = L.conv2d_forward(probe, w, np.zeros(3), stride=2, padding="same")
    dx, _, _ = L.conv2d_backward(x, cache)
    assert np.abs(y - dx).max() <= 1e-10


def test_conv_transpose_shape_error():
    with pytest.raises(ValueError):
        L.conv2d_transpose_forward(np.zeros((1, 2, 4, 4)), np.zeros((2, 3, 4, 4)),
                                   np.zeros(3), stride=2, out_side=20)


# ---------------------------------------------------------------- batchnorm

def test_batchnorm_standardized_input_unchanged():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((8, 2, 6, 6))
    x -= x.mean(axis=(0, 2, 3), keepdims=True)
    x /= x.std(axis=(0, 2, 3), keepdims=True)
    y, _ = L.batchnorm_forward(x, np.ones(2), np.zeros(2), np.zeros(2), np.ones(2), "train")
    assert np.abs(y - x).max() <= 1e-4  # eps bends the scale a little


def test_batchnorm_constant_channel_gives_shift():
    x = np.full((4, 1, 3, 3), 7.0)
    y, _ = L.batchnorm_forward(x, np.ones(1), np.full(1, 0.25), np.zeros(1), np.ones(1),
                               "train")
    assert np.allclose(y, 0.25)


def test_batchnorm_moments():
    rng = np.random.default_rng(4)
    x = rng.normal(3.0, 2.5, (16, 3, 8, 8))
    y, _ = L.batchnorm_forward(x, np.ones(3), np.zeros(3), np.zeros(3), np.ones(3),
                               "train")
    assert np.abs(y.mean(axis=(0, 2, 3))).max() <= 1e-6
    assert np.abs(y.var(axis=(0, 2, 3)) - 1.0).max() <= 1e-4


def test_batchnorm_rejects_single_sample_train():
    with pytest.raises(ValueError):
        L.batchnorm_forward(np.zeros((1, 2, 3, 3)), np.ones(2), np.zeros(2),
                            np.zeros(2), np.ones(2), "train")


def test_batchnorm_infer_uses_running_stats():
    x = np.full((1, 1, 2, 2), 10.0)
    y, _ = L.batchnorm_forward(x, np.ones(1), np.zeros(1),
                               np.full(1, 10.0), np.full(1, 4.0), "infer")
    assert np.abs(y).max() <= 1e-6


# ------------------------------------------------------------ architecture

def test_canonical_shape_trace_matches_reference():
    trace = ae.shape_trace(ae.canonical_config())
    assert trace == CANONICAL_TABLE
    assert ae.canonical_config().bottleneck == 2048


def test_desk_config_round_trips_shapes():
    cfg = ae.desk_config()
    trace = ae.shape_trace(cfg)
    assert trace[0] == ("input", 64, 1)
    assert trace[-1] == ("out", 64, 1)
    assert cfg.bottleneck == 128
    bott = [t for t in trace if t[0] == "bottleneck"]
    assert bott == [("bottleneck", 1, 128)]


def test_forward_zero_params_gives_half_reconstruction():
    cfg = ae.tiny_config()
    params = ae.init_params(cfg, seed=0)
    for k in params:
        if not (k.endswith(".bn_var") or k.endswith(".bn_gamma")):
            params[k] = np.zeros_like(params[k])
    res = ae.forward(cfg, params, np.zeros((2, 8, 8)), mode="infer")
    assert np.all(res.logits == 0.0)
    assert np.allclose(res.reconstruction, 0.5)
    assert np.all(res.z == 0.0)


def test_canonical_encoder_emits_2048_wide_codes():
    cfg = ae.canonical_config()
    params = ae.init_params(cfg, seed=0)
    rng = np.random.default_rng(5)
    codes = ae.encode_batch(cfg, params, rng.random((2, 256, 256)).astype(np.float32))
    assert codes.shape == (2, 2048)
    assert np.all(codes >= 0.0)


def test_desk_codes_width_128():
    cfg = ae.desk_config()
    params = ae.init_params(cfg, seed=0)
    codes = ae.encode_batch(cfg, params, np.random.default_rng(6).random((3, 64, 64)))
    assert codes.shape == (3, 128)


def test_nan_activation_raises_with_layer_name():
    cfg = ae.tiny_config()
    params = ae.init_params(cfg, seed=0)
    params["enc2.w"][0, 0, 0, 0] = np.nan
    with pytest.raises(ae.NumericalFault) as err:
        ae.forward(cfg, params, np.zeros((2, 8, 8)))
    assert err.value.layer == "enc2"


# ------------------------------------------------------------------- loss

def test_loss_closed_form_half_target():
    cfg = ae.tiny_config()
    params = ae.init_params(cfg, seed=0)
    logits = np.zeros((1, 1, 8, 8))
    target = np.full((1, 8, 8), 0.5)
    z = np.zeros((1, 8))
    lb = ae.loss(logits, target, cfg, params, z, alpha=0.0, beta=0.0)
    assert lb.recon == pytest.approx(64 * np.log(2), rel=1e-12)
    assert lb.l1 == 0.0 and lb.l2 == 0.0


def test_loss_zero_codes_zero_l1():
    cfg = ae.tiny_config()
    params = ae.init_params(cfg, seed=1)
    lb = ae.loss(np.zeros((1, 1, 8, 8)), np.zeros((1, 8, 8)), cfg, params,
                 np.zeros((1, 8)), alpha=0.0, beta=0.7)
    assert lb.l1 == 0.0


def test_loss_decomposition_exact():
    cfg = ae.tiny_config()
    params = ae.init_params(cfg, seed=2)
    rng = np.random.default_rng(7)
    lb = ae.loss(rng.standard_normal((2, 1, 8, 8)), rng.random((2, 8, 8)), cfg,
                 params, rng.random((2, 8)), alpha=0.1, beta=0.05)
    assert lb.total == lb.recon + lb.l2 + lb.l1


def test_loss_rejects_negative_weights():
    cfg = ae.tiny_config()
    params = ae.init_params(cfg, seed=0)
    with pytest.raises(ValueError):
        ae.loss(np.zeros((1, 1, 8, 8)), np.zeros((1, 8, 8)), cfg, params,
                np.zeros((1, 8)), alpha=-0.1, beta=0.0)


def test_loss_matches_extended_precision_oracle():
    import mpmath

    mpmath.mp.dps = 40
    rng = np.random.default_rng(8)
    logits = rng.standard_normal((1, 1, 8, 8)) * 8.0
    target = rng.random((1, 8, 8))
    cfg = ae.tiny_config()
    params = ae.init_params(cfg, seed=3)
    z = rng.random((1, 8))
    lb = ae.loss(logits, target, cfg, params, z, alpha=0.0, beta=0.0)
    expected = mpmath.mpf(0)
    for l, t in zip(logits.reshape(-1), target.reshape(-1)):
        lm = mpmath.mpf(float(l))
        tm = mpmath.mpf(float(t))
        expected += mpmath.log(1 + mpmath.exp(-abs(lm))) + max(lm, 0) - lm * tm
    assert abs(lb.recon - float(expected)) <= 1e-9 * abs(float(expected))


# ---------------------------------------------------------------- gradients

def _kink_safe_point(cfg, seed):
    """Parameters pushed away from ReLU kinks so h=1e-3 differences are valid."""
    params = ae.init_params(cfg, seed=0)
    rng = np.random.default_rng(seed)
    for k in list(params):
        if k.endswith(".b"):
            params[k] = rng.normal(0.0, 0.1, params[k].shape)
        elif k.endswith(".bn_beta"):
            params[k] = rng.normal(0.8, 0.1, params[k].shape)
        elif k.endswith(".bn_gamma"):
            params[k] = rng.uniform(0.4, 0.6, params[k].shape)
    return params


def run_gradcheck(cfg, params, batch, h=1e-3, tol=1e-4):
    grads, _, _ = ae.backward(cfg, params, batch)

    def total():
        res = ae.forward(cfg, params, batch, mode="train")
        return ae.loss(res.logits, batch, cfg, params, res.z,
                       cfg.alpha, cfg.beta).total

    n_ok = n_tot = 0
    for k in ae.trainable_keys(params):
        flat = params[k].reshape(-1)
        gf = grads[k].reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            lp = total()
            flat[i] = orig - h
            lm = total()
            flat[i] = orig
            fd = (lp - lm) / (2 * h)
            rel = abs(gf[i] - fd) / max(abs(gf[i]), abs(fd), 1e-6)
            n_tot += 1
            n_ok += rel <= tol
    return n_ok, n_tot


def test_gradients_match_finite_differences():
    cfg = ae.tiny_config(alpha=0.1, beta=0.05)
    params = _kink_safe_point(cfg, seed=2)
    batch = np.random.default_rng(2).uniform(0.1, 0.9, (4, 8, 8))
    n_ok, n_tot = run_gradcheck(cfg, params, batch)
    assert n_ok / n_tot >= 0.99, f"{n_ok}/{n_tot}"


def test_weight_norm_gradient_closed_form():
    cfg = ae.tiny_config(alpha=0.3, beta=0.0)
    params = ae.init_params(cfg, seed=4)
    grads, _, _ = ae.backward(cfg, params, np.full((2, 8, 8), 0.5))
    # subtract the data-term gradient computed at alpha=0
    grads0, _, _ = ae.backward(cfg, params, np.full((2, 8, 8), 0.5), alpha=0.0)
    for spec in cfg.layers:
        w = params[f"{spec.name}.w"]
        expected = 0.3 * w / np.sqrt((w ** 2).sum())
        got = grads[f"{spec.name}.w"] - grads0[f"{spec.name}.w"]
        assert np.abs(got - expected).max() <= 1e-12


def test_l2_squared_variant_gradient():
    from dataclasses import replace
    cfg = replace(ae.tiny_config(alpha=0.2, beta=0.0), l2_squared=True)
    params = ae.init_params(cfg, seed=4)
    grads, _, _ = ae.backward(cfg, params, np.full((2, 8, 8), 0.5))
    grads0, _, _ = ae.backward(cfg, params, np.full((2, 8, 8), 0.5), alpha=0.0)
    w = params["enc1.w"]
    got = grads["enc1.w"] - grads0["enc1.w"]
    assert np.abs(got - 0.4 * w).max() <= 1e-12


def test_final_bias_gradient_closed_form():
    # zero params, zero targets: d(recon)/d(out bias) = 0.5 per pixel,
    # batch-mean convention gives 0.5 * pixel count
    cfg = ae.tiny_config(alpha=0.0, beta=0.0)
    params = ae.init_params(cfg, seed=0)
    for k in params:
        if not (k.endswith(".bn_var") or k.endswith(".bn_gamma")):
            params[k] = np.zeros_like(params[k])
    grads, _, _ = ae.backward(cfg, params, np.zeros((3, 8, 8)), alpha=0.0, beta=0.0)
    assert grads["out.b"][0] == pytest.approx(0.5 * 64, rel=1e-12)


# ----------------------------------------------------------------- training

def _strip_images(n, side, seed):
    """Near-binary abstraction stand-ins: bright field, dark strips."""
    rng = np.random.default_rng(seed)
    data = np.ones((n, side, side), dtype=np.float32)
    for i in range(n):
        r = rng.integers(1, side - 1)
        data[i, max(0, r - 1):r + 1, :] = 0.15
        if i % 2:
            c = rng.integers(1, side - 1)
            data[i, :, max(0, c - 1):c + 1] = 0.15
    return data


def test_zero_steps_returns_initial_params():
    cfg = ae.tiny_config()
    params = ae.init_params(cfg, seed=0)
    res = ae.train(cfg, _strip_images(4, 8, 0), params, steps=0, batch_size=4)
    for k in params:
        assert np.allclose(res.params[k], params[k].astype(np.float32))
    assert res.history == [] and not res.diverged


def test_training_deterministic_under_seed():
    cfg = ae.tiny_config()
    data = _strip_images(8, 8, 1)
    p = ae.init_params(cfg, seed=0)
    a = ae.train(cfg, data, p, steps=25, batch_size=4, seed=9)
    b = ae.train(cfg, data, p, steps=25, batch_size=4, seed=9)
    assert a.history == b.history
    for k in a.params:
        assert np.array_equal(a.params[k], b.params[k])


def test_divergence_aborts_with_last_good_params():
    cfg = ae.tiny_config()
    data = _strip_images(8, 8, 2)
    # large enough that float32 activations overflow despite batchnorm
    settings = ae.AdamSettings(learning_rate=1e25)
    res = ae.train(cfg, data, ae.init_params(cfg, seed=0), steps=50, batch_size=4,
                   optimizer=settings, seed=0)
    assert res.diverged
    assert res.steps_completed < 50
    for v in res.params.values():
        assert np.all(np.isfinite(v))


def test_sparsity_increases_with_beta():
    data = _strip_images(16, 8, 3)
    l1 = {}
    for beta in (0.01, 0.05, 1.0):
        cfg = ae.tiny_config(alpha=0.1, beta=beta)
        res = ae.train(cfg, data, ae.init_params(cfg, seed=0), steps=300,
                       batch_size=8, seed=0)
        codes = ae.encode_batch(cfg, res.params, data)
        l1[beta] = float(np.abs(codes).sum(axis=1).mean())
    assert l1[0.01] >= l1[0.05] >= l1[1.0]
    assert l1[1.0] < l1[0.01]


@pytest.mark.slow
def test_desk_training_cuts_reconstruction_loss():
    from junction_atlas import imaging, synth

    corpus = synth.generate_corpus(4, side=64, seed=0)
    data = np.stack([
        imaging.preprocess(im, keep_r=13.0, fade_r=32.0).image for im in corpus.images
    ]).astype(np.float32)
    cfg = ae.desk_config()
    p0 = ae.init_params(cfg, seed=0)

    def full_recon(params):
        res = ae.forward(cfg, params, data, mode="infer")
        return ae.loss(res.logits, data, cfg, params, res.z, 0.0, 0.0).recon

    start = full_recon(p0)
    res = ae.train(cfg, data, p0, steps=500, batch_size=8, seed=0)
    assert not res.diverged
    end = full_recon(res.params)
    assert end <= 0.2 * start


def test_encode_same_image_identical_rows():
    cfg = ae.tiny_config()
    params = ae.init_params(cfg, seed=5)
    img = np.random.default_rng(10).random((8, 8))
    codes = ae.encode_batch(cfg, params, np.stack([img, img]))
    assert np.array_equal(codes[0], codes[1])


def test_compression_report_keys():
    rng = np.random.default_rng(11)
    codes = rng.random((10, 128)) * (rng.random((10, 128)) > 0.8)
    rep = ae.compression_report(codes, input_side=64)
    assert rep["bottleneck_width"] == 128
    assert rep["raw_pixels"] == 4096
    assert 0.0 < rep["effective_compression"] <= 1.0


# --------------------------------------------------------------- checkpoint

def test_checkpoint_round_trip(tmp_path):
    cfg = ae.tiny_config(alpha=0.2, beta=0.07)
    params = ae.init_params(cfg, seed=6)
    path = tmp_path / "model.ckpt"
    ae.save_checkpoint(path, cfg, params)
    cfg2, params2 = ae.load_checkpoint(path)
    assert cfg2 == cfg
    assert sorted(params2) == sorted(params)
    for k in params:
        assert np.allclose(params2[k], params[k], atol=1e-6)  # f32 payload


def test_checkpoint_rejects_bad_magic(tmp_path):
    path = tmp_path / "junk.ckpt"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(ae.CheckpointError):
        ae.load_checkpoint(path)


def test_checkpoint_rejects_wrong_version(tmp_path):
    import struct

    cfg = ae.tiny_config()
    params = ae.init_params(cfg, seed=0)
    path = tmp_path / "model.ckpt"
    ae.save_checkpoint(path, cfg, params)
    raw = bytearray(path.read_bytes())
    raw[4:8] = struct.pack("<I", 99)
    path.write_bytes(bytes(raw))
    with pytest.raises(ae.CheckpointError, match="version"):
        ae.load_checkpoint(path)

import numpy as np
import pytest
import sympy as sp

from warehouse_layout.domain import Layout, encode_layout
from warehouse_layout.surrogate import (
    PARAM_ORDER,
    SampleSet,
    ShapeError,
    TrainingSample,
    _init,
    forward,
    init_model,
    load_model,
    loss,
    predict_fitness,
    save_model,
    tconv_backward,
    tconv_forward,
    train_online,
    update,
)


def small_model(seed=0, h=4, w=4, n_features=6, width=4, channels=4, lam=1.0):
    return _init(h, w, n_features, seed, width, channels, (width, width), 3, lam, 1.0, 1.0, dtype=np.float64)


def random_sample(model, rng):
    x = np.zeros(model.n_features)
    x[rng.choice(model.n_features, size=2, replace=False)] = 1.0
    return TrainingSample(x, float(rng.normal()), rng.normal(size=(model.h, model.w)))


def naive_tconv(x, K, bias):
    n, cin, h, w = x.shape
    cout, k = K.shape[1], K.shape[2]
    p = (k - 1) // 2
    out = np.zeros((n, cout, h, w)) + bias[None, :, None, None]
    for b in range(n):
        for c in range(cin):
            for o in range(cout):
                for a in range(h):
                    for e in range(w):
                        for i in range(k):
                            for j in range(k):
                                y, z = a + i - p, e + j - p
                                if 0 <= y < h and 0 <= z < w:
                                    out[b, o, y, z] += x[b, c, a, e] * K[c, o, i, j]
    return out


# -- architecture and init ----------------------------------------------------------


def test_shapes_follow_grid(desk, large):
    m = init_model(large, seed=0)
    assert m.params["W1"].shape == (100, 128)
    assert m.params["W2"].shape == (128, 400)
    assert m.params["K1"].shape == (1, 16, 3, 3)
    assert m.params["K2"].shape == (16, 1, 3, 3)
    assert [m.params[k].shape[1] for k in ("W3", "W4", "W5")] == [256, 128, 1]
    d = init_model(desk, seed=0)
    assert d.params["W2"].shape == (128, 100)
    heat, g = d.forward(encode_layout(Layout((1, 2, 3, 1, 2, 3, 1, 2)), 3))
    assert heat.shape == (10, 10) and isinstance(g, float)


def test_init_deterministic_and_seed_dependent(desk):
    a, b, c = init_model(desk, 3), init_model(desk, 3), init_model(desk, 4)
    assert all(np.array_equal(a.params[k], b.params[k]) for k in PARAM_ORDER)
    assert not np.array_equal(a.params["W1"], c.params["W1"])
    assert all(not a.params[k].any() for k in ("b1", "b2", "c1", "c2", "b3", "b4", "b5"))


def test_init_is_fan_in_bounded(desk):
    m = init_model(desk, 0)
    assert np.abs(m.params["W1"]).max() <= np.sqrt(6 / 24)
    assert np.abs(m.params["K2"]).max() <= np.sqrt(6 / (16 * 9))


def test_fresh_model_outputs_finite(desk):
    m = init_model(desk, 1)
    rng = np.random.default_rng(0)
    X = np.stack([encode_layout(Layout(tuple(rng.integers(1, 4, 8))), 3) for _ in range(50)])
    heat, g = m.forward(X)
    assert np.isfinite(heat).all() and np.isfinite(g).all()


def test_zero_weights_give_zero_outputs(desk):
    m = init_model(desk, 1)
    for k in m.params:
        m.params[k][...] = 0
    heat, g = m.forward(np.ones(24))
    assert not heat.any() and g == 0.0


def test_forward_is_pure(desk):
    m = init_model(desk, 2)
    x = encode_layout(Layout((3, 2, 1, 1, 2, 3, 3, 1)), 3)
    before = {k: v.copy() for k, v in m.params.items()}
    h1, g1 = forward(m, x)
    h2, g2 = forward(m, x)
    assert g1 == g2 and np.array_equal(h1, h2)
    assert all(np.array_equal(before[k], m.params[k]) for k in before)


def test_shape_mismatch(desk):
    with pytest.raises(ShapeError):
        init_model(desk, 0).forward(np.ones(5))


# -- loss ---------------------------------------------------------------------------


def test_loss_zero_for_perfect_prediction():
    m = small_model()
    x = np.eye(6)[0]
    heat, g = m.forward(x)
    assert loss(m, TrainingSample(x, g, heat)) == pytest.approx(0.0, abs=1e-24)


def test_loss_reward_offset_of_two():
    m = small_model()
    x = np.eye(6)[1]
    heat, g = m.forward(x)
    assert loss(m, TrainingSample(x, g - 2.0, heat)) == pytest.approx(4.0)


def test_loss_matches_scalar_recomputation():
    m = small_model(lam=1.0)
    rng = np.random.default_rng(3)
    s = random_sample(m, rng)
    heat, g = m.forward(s.x)
    cells = [(heat[r, c] - s.i[r, c]) ** 2 for r in range(m.h) for c in range(m.w)]
    expected = (g - s.g) ** 2 + sum(cells) / len(cells)
    assert loss(m, s) == pytest.approx(expected, rel=1e-12)


# -- gradients ----------------------------------------------------------------------


def test_tconv_matches_naive_loop():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(2, 3, 4, 5))
    K = rng.normal(size=(3, 2, 3, 3))
    b = rng.normal(size=2)
    assert np.allclose(tconv_forward(x, K, b), naive_tconv(x, K, b), atol=1e-12)


def test_tconv_backward_matches_finite_differences():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(1, 2, 3, 3))
    K = rng.normal(size=(2, 2, 3, 3))
    b = rng.normal(size=2)
    gout = rng.normal(size=(1, 2, 3, 3))
    dx, dK, db = tconv_backward(x, K, gout)
    f = lambda x_, K_, b_: float((tconv_forward(x_, K_, b_) * gout).sum())
    eps = 1e-6
    for arr, grad in ((x, dx), (K, dK), (b, db)):
        for idx in np.ndindex(arr.shape):
            old = arr[idx]
            arr[idx] = old + eps
            up = f(x, K, b)
            arr[idx] = old - eps
            down = f(x, K, b)
            arr[idx] = old
            assert grad[idx] == pytest.approx((up - down) / (2 * eps), rel=1e-6, abs=1e-8)


def test_gradient_check_reduced_network():
    m = small_model(seed=5)
    rng = np.random.default_rng(11)
    batch = [random_sample(m, rng) for _ in range(3)]
    X = np.stack([s.x for s in batch])
    G = np.array([s.g for s in batch])
    I = np.stack([s.i for s in batch])
    _, grads = m.gradients(X, G, I)
    names = list(PARAM_ORDER)
    worst = 0.0
    step = 1e-4
    for _ in range(100):
        name = names[rng.integers(len(names))]
        arr = m.params[name]
        idx = tuple(int(rng.integers(s)) for s in arr.shape)
        old = arr[idx]
        arr[idx] = old + step
        up = m.batch_loss(X, G, I)
        arr[idx] = old - step
        down = m.batch_loss(X, G, I)
        arr[idx] = old
        numeric = (up - down) / (2 * step)
        analytic = grads[name][idx]
        worst = max(worst, abs(analytic - numeric) / max(abs(analytic) + abs(numeric), 1e-8))
    assert worst < 1e-4


def symbolic_loss(model, x, g_target, heat_target):
    """The tiny network written out with sympy symbols for every parameter.

    Only valid where every ReLU is in its linear region, which the caller
    checks; the activations are therefore left out of the expression.
    """
    syms = {}

    def tensor(name):
        arr = model.params[name]
        out = np.empty(arr.shape, dtype=object)
        for idx in np.ndindex(arr.shape):
            s = sp.Symbol(f"{name}_{'_'.join(map(str, idx))}")
            syms[s] = (name, idx)
            out[idx] = s
        return out

    P = {k: tensor(k) for k in PARAM_ORDER}
    relu = lambda v: v
    h, w = model.h, model.w
    a1 = [relu(sum(x[i] * P["W1"][i, j] for i in range(len(x))) + P["b1"][j]) for j in range(P["W1"].shape[1])]
    a2 = [relu(sum(a1[i] * P["W2"][i, j] for i in range(len(a1))) + P["b2"][j]) for j in range(h * w)]
    m = np.array(a2, dtype=object).reshape(1, h, w)

    def tconv(inp, K, bias, act):
        cin, cout = K.shape[0], K.shape[1]
        out = np.empty((cout, h, w), dtype=object)
        for o in range(cout):
            for y in range(h):
                for z in range(w):
                    acc = bias[o]
                    for c in range(cin):
                        for i in range(3):
                            for j in range(3):
                                a, e = y - i + 1, z - j + 1
                                if 0 <= a < h and 0 <= e < w:
                                    acc += inp[c, a, e] * K[c, o, i, j]
                    out[o, y, z] = act(acc)
        return out

    a3 = tconv(m, P["K1"], P["c1"], relu)
    heat = tconv(a3, P["K2"], P["c2"], lambda v: v)[0]
    f = list(a3.reshape(-1))
    a4 = [relu(sum(f[i] * P["W3"][i, j] for i in range(len(f))) + P["b3"][j]) for j in range(P["W3"].shape[1])]
    a5 = [relu(sum(a4[i] * P["W4"][i, j] for i in range(len(a4))) + P["b4"][j]) for j in range(P["W4"].shape[1])]
    g = sum(a5[i] * P["W5"][i, 0] for i in range(len(a5))) + P["b5"][0]
    heat_mse = sum((heat[r, c] - heat_target[r, c]) ** 2 for r in range(h) for c in range(w)) / (h * w)
    return (g - g_target) ** 2 + model.lam * heat_mse, syms


def test_update_matches_symbolic_gradient_on_tiny_network():
    m = _init(2, 2, 2, 7, 2, 2, (2, 2), 3, 1.0, 1.0, 1.0, dtype=np.float64)
    # keep every unit active so the derivative is taken away from ReLU kinks
    for k in ("b1", "b2", "c1", "b3", "b4"):
        m.params[k][...] = 3.0
    for k in ("W1", "W2", "K1", "W3", "W4"):
        m.params[k][...] = np.abs(m.params[k])
    rng = np.random.default_rng(0)
    sample = TrainingSample(np.array([1.0, 0.0]), 0.5, rng.normal(size=(2, 2)))
    _, _, cache = m._forward(sample.x[None])
    assert all((cache[k] > 0).all() for k in ("z1", "z2", "z3", "z4", "z5"))
    expr, syms = symbolic_loss(m, sample.x, sample.g, sample.i)
    values = {s: float(m.params[n][idx]) for s, (n, idx) in syms.items()}
    before = {k: v.copy() for k, v in m.params.items()}
    lr = 0.01
    update(m, [sample], lr=lr, momentum=0.9)
    for s, (name, idx) in syms.items():
        grad = float(sp.diff(expr, s).xreplace(values))
        delta = m.params[name][idx] - before[name][idx]
        assert delta == pytest.approx(-lr * grad, rel=1e-9, abs=1e-12)


# -- training -------------------------------------------------------------------------


def test_zero_learning_rate_leaves_parameters():
    m = small_model()
    rng = np.random.default_rng(0)
    before = {k: v.copy() for k, v in m.params.items()}
    for _ in range(3):
        update(m, [random_sample(m, rng) for _ in range(4)], lr=0.0)
    assert all(np.array_equal(before[k], m.params[k]) for k in before)


def test_empty_batch_rejected():
    with pytest.raises(ValueError):
        update(small_model(), [])


def test_repeated_updates_on_one_sample_settle(desk):
    m = init_model(desk, seed=0)
    rng = np.random.default_rng(1)
    x = encode_layout(Layout((1, 2, 3, 1, 2, 3, 1, 2)), 3)
    sample = TrainingSample(x, 1.0, m.normalize_heatmap(rng.integers(0, 90, size=(10, 10))))
    losses = []
    for _ in range(300):
        losses.append(loss(m, sample))
        update(m, [sample], lr=1e-3, momentum=0.9)
    tail = np.asarray(losses[50:])
    assert np.all(np.diff(tail) <= 1e-12 * np.abs(tail[:-1]))
    assert tail[-1] < losses[0]


def sample_set(model, n, seed=0):
    rng = np.random.default_rng(seed)
    s = SampleSet(model.n_features, model.h, model.w)
    for _ in range(n):
        t = random_sample(model, rng)
        s.add(t.x, 100 + 10 * t.g, np.abs(t.i))
    return s


def test_train_online_counts_updates():
    m = small_model()
    train_online(m, sample_set(m, 40), 5000, np.random.default_rng(0))
    assert m.updates == 5000


def test_train_online_zero_updates_is_identity():
    m = small_model()
    before = {k: v.copy() for k, v in m.params.items()}
    train_online(m, sample_set(m, 5), 0, np.random.default_rng(0))
    assert all(np.array_equal(before[k], m.params[k]) for k in before) and m.updates == 0


def test_train_online_rejects_empty_set():
    m = small_model()
    with pytest.raises(ValueError):
        train_online(m, SampleSet(m.n_features, m.h, m.w), 1, np.random.default_rng(0))


def test_train_online_replays():
    a, b = small_model(), small_model()
    s = sample_set(a, 50)
    train_online(a, s, 200, np.random.default_rng(9))
    train_online(b, s, 200, np.random.default_rng(9))
    assert all(np.array_equal(a.params[k], b.params[k]) for k in PARAM_ORDER)


def test_batch_size_caps_at_sample_count():
    m = small_model()
    s = sample_set(m, 3)
    train_online(m, s, 10, np.random.default_rng(0), batch_size=32)
    assert m.updates == 10


def test_training_reduces_loss(desk):
    m = init_model(desk, seed=0)
    rng = np.random.default_rng(0)
    s = SampleSet.for_config(desk)
    for _ in range(64):
        l = Layout(tuple(int(v) for v in rng.integers(1, 4, 8)))
        s.add(encode_layout(l, 3), float(rng.integers(400, 800)), rng.integers(0, 90, size=(10, 10)))
    m.refresh_stats(s)
    X, G, I = s.arrays()
    before = m.batch_loss(X, m.normalize_reward(G), m.normalize_heatmap(I))
    train_online(m, s, 200, rng)
    after = m.batch_loss(X, m.normalize_reward(G), m.normalize_heatmap(I))
    assert after < before


def test_predict_fitness_denormalizes_forward(desk):
    m = init_model(desk, 0)
    m.g_mean, m.g_std = 500.0, 40.0
    layout = Layout((2, 2, 1, 1, 3, 3, 1, 2))
    _, g = m.forward(encode_layout(layout, 3))
    assert predict_fitness(m, layout, 3) == pytest.approx(500.0 + 40.0 * g)
    assert m.predict_many([layout, layout], 3).tolist() == pytest.approx([500.0 + 40.0 * g] * 2)


def test_model_file_round_trip(tmp_path):
    m = small_model(seed=4)
    train_online(m, sample_set(m, 20), 5, np.random.default_rng(0))
    path = tmp_path / "model.bin"
    save_model(m, path)
    assert path.read_bytes()[:4] == b"WLSM"
    back = load_model(path)
    assert all(np.array_equal(m.params[k], back.params[k]) for k in PARAM_ORDER)
    assert (back.g_mean, back.g_std, back.updates) == (m.g_mean, m.g_std, m.updates)
    x = np.eye(6)[2]
    assert back.forward(x)[1] == m.forward(x)[1]

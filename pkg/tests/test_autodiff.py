import math

import numpy as np
import pytest

from causalgen import autodiff as ad
from _gradcheck import check_gradients


def test_softmax_symmetry():
    out = ad.softmax(ad.Tensor([0.0, 0.0]))
    assert np.array_equal(out.data, [0.5, 0.5])


def test_softmax_rows_sum_to_one():
    rng = np.random.default_rng(7)
    out = ad.softmax(ad.Tensor(rng.normal(size=(5, 9)) * 10))
    assert np.abs(out.data.sum(axis=-1) - 1.0).max() <= 1e-12


def test_matmul_identity():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    out = ad.matmul(ad.Tensor(np.eye(2)), ad.Tensor(a))
    assert np.array_equal(out.data, a)


def test_cross_entropy_uniform():
    logits = ad.Tensor(np.zeros((3, 8)))
    loss = ad.cross_entropy(logits, np.array([0, 5, 7]))
    assert loss.item() == pytest.approx(math.log(8), abs=1e-12)


def test_cross_entropy_bad_target():
    with pytest.raises(ValueError):
        ad.cross_entropy(ad.Tensor(np.zeros((1, 4))), np.array([4]))


def test_backward_sum_is_ones():
    p = ad.Parameter(np.array([1.0, -2.0, 5.0]), "p")
    ad.backward(ad.tsum(p))
    assert np.array_equal(p.grad, np.ones(3))


def test_backward_constant_zero():
    p = ad.Parameter(np.array([1.0, 2.0]), "p")
    ad.backward(ad.tsum(ad.mul(p, 0.0)))
    assert np.array_equal(p.grad, np.zeros(2))


def test_backward_rejects_nonscalar():
    p = ad.Parameter(np.ones(3), "p")
    with pytest.raises(ad.AutodiffError):
        ad.backward(ad.mul(p, 2.0))


def test_shape_mismatch_names_op_and_shapes():
    with pytest.raises(ad.ShapeMismatch) as exc:
        ad.matmul(ad.Tensor(np.ones((2, 3))), ad.Tensor(np.ones((4, 2))))
    assert exc.value.op == "matmul"
    assert (2, 3) in exc.value.shapes and (4, 2) in exc.value.shapes
    assert "matmul" in str(exc.value)


def test_mlp_gradient_matches_finite_differences():
    rng = np.random.default_rng(11)
    mlp = ad.MLP([3, 4, 2], rng, "mlp", activation="tanh")
    x = ad.Tensor(rng.normal(size=(5, 3)))
    targets = np.array([0, 1, 0, 1, 1])

    def loss():
        return ad.cross_entropy(mlp(x), targets)

    check_gradients(loss, mlp.parameters(), h=1e-5, rtol=1e-4)


@pytest.mark.parametrize("op", ["matmul", "add", "softmax", "layer_norm",
                                "embedding_lookup", "gru_cell",
                                "cross_entropy", "affine"])
def test_layer_gradcheck(op):
    rng = np.random.default_rng(hash(op) % 2**32)
    proj = ad.Tensor(rng.normal(size=(4, 3)))

    if op == "matmul":
        a = ad.Parameter(rng.normal(size=(4, 5)), "a")
        b = ad.Parameter(rng.normal(size=(5, 3)), "b")
        params = [a, b]
        build = lambda: ad.tsum(ad.mul(ad.matmul(a, b), proj))
    elif op == "add":
        a = ad.Parameter(rng.normal(size=(4, 3)), "a")
        b = ad.Parameter(rng.normal(size=(3,)), "b")  # broadcast path
        params = [a, b]
        build = lambda: ad.tsum(ad.mul(ad.add(a, b), proj))
    elif op == "softmax":
        a = ad.Parameter(rng.normal(size=(4, 3)), "a")
        params = [a]
        build = lambda: ad.tsum(ad.mul(ad.softmax(a), proj))
    elif op == "layer_norm":
        a = ad.Parameter(rng.normal(size=(4, 3)), "a")
        g = ad.Parameter(rng.normal(size=(3,)), "g")
        b = ad.Parameter(rng.normal(size=(3,)), "b")
        params = [a, g, b]
        build = lambda: ad.tsum(ad.mul(ad.layer_norm(a, g, b), proj))
    elif op == "embedding_lookup":
        table = ad.Parameter(rng.normal(size=(6, 3)), "table")
        ids = np.array([0, 5, 2, 5])
        params = [table]
        build = lambda: ad.tsum(ad.mul(ad.embedding_lookup(table, ids), proj))
    elif op == "gru_cell":
        cell = ad.GRUCell(3, 4, rng, "gru")
        x = ad.Tensor(rng.normal(size=(3,)))
        h = ad.Tensor(rng.normal(size=(4,)))
        vec = ad.Tensor(rng.normal(size=(4,)))
        params = cell.parameters()
        build = lambda: ad.tsum(ad.mul(cell(x, h), vec))
    elif op == "cross_entropy":
        a = ad.Parameter(rng.normal(size=(4, 3)), "a")
        targets = np.array([0, 2, 1, 2])
        params = [a]
        build = lambda: ad.cross_entropy(a, targets)
    else:  # affine
        x = ad.Tensor(rng.normal(size=(4, 5)))
        w = ad.Parameter(rng.normal(size=(5, 3)), "w")
        b = ad.Parameter(rng.normal(size=(3,)), "b")
        params = [w, b]
        build = lambda: ad.tsum(ad.mul(ad.affine(x, w, b), proj))

    check_gradients(build, params, h=1e-5, rtol=1e-4)


@pytest.mark.parametrize("fn", [ad.tanh, ad.sigmoid, ad.relu, ad.gelu,
                                ad.exp, lambda t: ad.log(ad.add(ad.mul(t, t), 1.0))])
def test_pointwise_gradcheck(fn):
    rng = np.random.default_rng(3)
    p = ad.Parameter(rng.normal(size=(6,)), "p")
    vec = ad.Tensor(rng.normal(size=(6,)))
    check_gradients(lambda: ad.tsum(ad.mul(fn(p), vec)), [p])


def test_layer_norm_normalizes():
    rng = np.random.default_rng(5)
    x = ad.Tensor(rng.normal(size=(8, 16)) * 3 + 2)
    out = ad.layer_norm(x, ad.Tensor(1.0), ad.Tensor(0.0)).data
    assert np.abs(out.mean(axis=-1)).max() <= 1e-9
    assert np.abs(out.var(axis=-1) - 1.0).max() <= 1e-6


def test_layer_norm_constant_input_finite():
    out = ad.layer_norm(ad.Tensor(np.full(4, 7.0)), ad.Tensor(1.0), ad.Tensor(0.5))
    assert np.array_equal(out.data, np.full(4, 0.5))


def test_adam_zero_gradient_leaves_parameter():
    p = ad.Parameter(np.array([1.0, 2.0]), "p")
    opt = ad.Adam([p], lr=0.1)
    opt.step()
    assert np.array_equal(p.data, [1.0, 2.0])


def test_adam_first_step_magnitude():
    p = ad.Parameter(np.array(0.0), "w")
    opt = ad.Adam([p], lr=0.1)
    p.grad[...] = 1.0
    opt.step()
    # bias correction makes the very first update exactly -lr/(1+eps)
    assert p.data == pytest.approx(-0.1, abs=1e-8)
    assert p.grad == 0.0


def test_adam_converges_on_quadratic():
    w = ad.Parameter(np.array(0.0), "w")
    opt = ad.Adam([w], lr=0.1)
    for _ in range(200):
        loss = ad.power(ad.add(w, -3.0), 2.0)
        ad.backward(loss)
        opt.step()
    assert abs(w.data - 3.0) < 0.1


def test_adam_rejects_nan_gradient():
    p = ad.Parameter(np.zeros(2), "theta")
    opt = ad.Adam([p])
    p.grad[0] = np.nan
    with pytest.raises(ad.AutodiffError, match="theta"):
        opt.step()


def test_deterministic_forward_backward():
    def run():
        rng = np.random.default_rng(42)
        mlp = ad.MLP([4, 8, 3], rng, "m")
        x = ad.Tensor(rng.normal(size=(6, 4)))
        loss = ad.cross_entropy(mlp(x), np.array([0, 1, 2, 0, 1, 2]))
        ad.backward(loss)
        return loss.item(), [p.grad.copy() for p in mlp.parameters()]

    l1, g1 = run()
    l2, g2 = run()
    assert l1 == l2
    for a, b in zip(g1, g2):
        assert np.array_equal(a, b)


def test_forward_op_dispatch():
    out = ad.forward_op("softmax", ad.Tensor([0.0, 0.0]))
    assert np.array_equal(out.data, [0.5, 0.5])
    with pytest.raises(ad.AutodiffError):
        ad.forward_op("convolve", ad.Tensor([1.0]))


def test_gradient_accumulates_across_uses():
    p = ad.Parameter(np.array([2.0]), "p")
    loss = ad.tsum(ad.add(ad.mul(p, 3.0), ad.mul(p, 4.0)))
    ad.backward(loss)
    assert np.array_equal(p.grad, [7.0])


def test_checkpoint_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    params = [ad.Parameter(rng.normal(size=(3, 2)), "a"),
              ad.Parameter(rng.normal(size=(5,)), "b.weight"),
              ad.Parameter(np.array(1.5), "scalar")]
    path = tmp_path / "params.bin"
    ad.save_parameters(params, path)
    loaded = ad.load_parameters(path)
    assert set(loaded) == {"a", "b.weight", "scalar"}
    for p in params:
        assert np.array_equal(loaded[p.name], p.data)

    fresh = [ad.Parameter(np.zeros((3, 2)), "a"),
             ad.Parameter(np.zeros(5), "b.weight"),
             ad.Parameter(np.array(0.0), "scalar")]
    ad.assign_parameters(fresh, loaded)
    for orig, new in zip(params, fresh):
        assert np.array_equal(orig.data, new.data)


def test_checkpoint_container_header(tmp_path):
    params = [ad.Parameter(np.arange(4, dtype=float), "w")]
    path = tmp_path / "model.ckpt"
    ad.save_checkpoint(path, {"kind": "demo", "vocab": ["a", "b"]}, params)
    header, values = ad.load_checkpoint(path)
    assert header == {"kind": "demo", "vocab": ["a", "b"]}
    assert np.array_equal(values["w"], np.arange(4, dtype=float))


def test_assign_parameters_strict(tmp_path):
    params = [ad.Parameter(np.zeros(3), "w")]
    with pytest.raises(ad.CheckpointError):
        ad.assign_parameters(params, {"other": np.zeros(3)})
    with pytest.raises(ad.CheckpointError):
        ad.assign_parameters(params, {"w": np.zeros(4)})


def test_checkpoint_bytes_deterministic():
    params = [ad.Parameter(np.linspace(0, 1, 7), "w"),
              ad.Parameter(np.eye(3), "m")]
    assert ad.dump_parameters(params) == ad.dump_parameters(params)

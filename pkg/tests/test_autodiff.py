import numpy as np
import pytest

from roadcast import autodiff as ad

from opcheck import check_kind


def test_matmul_identity():
    out = ad.matmul(ad.Tensor(np.eye(2)), ad.Tensor([[3.0], [4.0]]))
    assert out.data.ravel().tolist() == [3.0, 4.0]


def test_relu_sign_cases():
    out = ad.relu(ad.Tensor([-1.0, 0.0, 2.0]))
    assert out.data.tolist() == [0.0, 0.0, 2.0]


def test_conv1d_length_formula():
    x = ad.Tensor(np.zeros((1, 2016)))
    w = ad.Tensor(np.zeros((4, 1, 13)))
    assert ad.conv1d(x, w, stride=1).shape == (4, 2004)


def test_conv1d_rejects_bad_shapes():
    x = ad.Tensor(np.zeros((2, 10)))
    w = ad.Tensor(np.zeros((4, 3, 5)))
    with pytest.raises(ValueError, match="3 input channels"):
        ad.conv1d(x, w)
    with pytest.raises(ValueError, match="positive"):
        ad.conv1d(ad.Tensor(np.zeros((3, 10))), w, stride=0)


def test_matmul_rejects_mismatch():
    with pytest.raises(ValueError, match=r"\(2, 3\)"):
        ad.matmul(ad.Tensor(np.zeros((2, 3))), ad.Tensor(np.zeros((2, 3))))


def test_forward_op_rejects_nonfinite():
    with pytest.raises(ValueError, match="non-finite"):
        ad.forward_op("relu", [ad.Tensor([np.nan, 1.0])])


def test_square_derivative():
    x = ad.Tensor(3.0, requires_grad=True)
    assert ad.mul(x, x).backward()[x] == 6.0


def test_relu_dead_unit():
    x = ad.Tensor(-1.0, requires_grad=True)
    assert ad.relu(x).backward()[x] == 0.0


def test_nonparticipating_leaf_gets_zero_grad():
    x = ad.Tensor([1.0, 2.0], requires_grad=True)
    z = ad.Tensor([5.0], requires_grad=True)
    grads = ad.sum_(ad.mul(x, x)).backward(leaves=[x, z])
    assert np.array_equal(grads[z], np.zeros(1))


def test_backward_seed_shape_checked():
    x = ad.Tensor([1.0, 2.0], requires_grad=True)
    y = ad.mul(x, x)
    with pytest.raises(ValueError, match="seed shape"):
        y.backward(np.ones(3))


def test_record_consumed_once():
    x = ad.Tensor([1.0, 2.0], requires_grad=True)
    y = ad.sum_(ad.mul(x, x))
    y.backward()
    with pytest.raises(RuntimeError, match="consumed"):
        y.backward()


def test_softmax_cross_entropy_gradient_vs_fd():
    rng = np.random.default_rng(7)
    point = rng.normal(size=(4, 3))
    target = rng.integers(0, 3, size=4)
    onehot = np.zeros((4, 3))
    onehot[np.arange(4), target] = 1.0

    def xent(x):
        p = ad.softmax(x, axis=1)
        return ad.affine(ad.sum_(ad.mul(ad.log(p), ad.Tensor(onehot))), scale=-0.25)

    assert ad.finite_diff_check(xent, point, step=1e-5) < 1e-4


def test_finite_diff_constant_gradient():
    assert ad.finite_diff_check(lambda x: ad.sum_(x), np.array([1.0, -2.0, 0.3])) < 1e-9


def test_finite_diff_quadratic():
    rng = np.random.default_rng(0)
    assert ad.finite_diff_check(lambda x: ad.sum_(ad.mul(x, x)), rng.normal(size=(3, 4))) < 1e-6


def test_finite_diff_relu_away_from_kink():
    point = np.array([0.5, -0.7, 1.2, -2.0])
    assert ad.finite_diff_check(lambda x: ad.sum_(ad.relu(x)), point) < 1e-6


def test_finite_diff_rejects_nonscalar():
    with pytest.raises(ValueError, match="scalar"):
        ad.finite_diff_check(lambda x: x, np.ones(3))


@pytest.mark.parametrize("kind", ad.OP_KINDS)
def test_gradients_match_finite_differences(kind):
    assert check_kind(kind, trials=100, seed=hash(kind) % 2**31) < 1e-4


def test_seeded_replay_is_bitwise_identical():
    def run():
        rng = np.random.default_rng(42)
        x = ad.Tensor(rng.normal(size=(5, 5)), requires_grad=True)
        y = ad.sum_(ad.softmax(ad.matmul(x, ad.Tensor(rng.normal(size=(5, 4)))), axis=1))
        g = y.backward()[x]
        return y.data.copy(), g.copy()

    y1, g1 = run()
    y2, g2 = run()
    assert np.array_equal(y1, y2) and np.array_equal(g1, g2)


def test_softmax_rows_sum_to_one():
    rng = np.random.default_rng(3)
    for _ in range(20):
        s = ad.softmax(ad.Tensor(rng.normal(size=(4, 6)) * 10), axis=1)
        assert np.all(s.data >= 0)
        assert np.max(np.abs(s.data.sum(axis=1) - 1.0)) <= 1e-12


def test_batchnorm_inference_is_affine():
    rng = np.random.default_rng(5)
    gamma = rng.normal(size=3)
    beta = rng.normal(size=3)
    rm = rng.normal(size=3)
    rv = np.abs(rng.normal(size=3)) + 0.1
    x = rng.normal(size=(3, 7))
    out = ad.batchnorm(
        ad.Tensor(x), ad.Tensor(gamma), ad.Tensor(beta), axis=0,
        running_mean=rm, running_var=rv, training=False,
    )
    scale = gamma / np.sqrt(rv + 1e-5)
    expected = x * scale[:, None] + (beta - rm * scale)[:, None]
    np.testing.assert_allclose(out.data, expected, rtol=0, atol=1e-12)


def test_batchnorm_training_updates_running_stats():
    rng = np.random.default_rng(6)
    x = rng.normal(size=(2, 50)) * 3 + 1
    rm = np.zeros(2)
    rv = np.ones(2)
    ad.batchnorm(
        ad.Tensor(x), ad.Tensor(np.ones(2)), ad.Tensor(np.zeros(2)), axis=0,
        running_mean=rm, running_var=rv, training=True,
    )
    np.testing.assert_allclose(rm, 0.1 * x.mean(axis=1), rtol=1e-12)
    np.testing.assert_allclose(rv, 0.9 + 0.1 * x.var(axis=1), rtol=1e-12)


def test_std_pool_constant_input_finite_gradient():
    x = ad.Tensor(np.full((2, 4), 3.0), requires_grad=True)
    out = ad.sum_(ad.std_pool(x, axis=1))
    g = out.backward()[x]
    assert np.all(np.isfinite(g))
    assert np.allclose(out.data, np.sqrt(1e-8) * 2)


def test_tensor_data_is_immutable():
    t = ad.Tensor([1.0, 2.0])
    with pytest.raises(ValueError):
        t.data[0] = 5.0

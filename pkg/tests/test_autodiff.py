import numpy as np
import pytest

import priortag.autodiff as ad
from priortag.autodiff import Tape, Tensor

from numgrad import central_diff, rel_err

TOL = 1e-4


def scalarize(t, tape):
    # fixed random projection so every output element influences the loss
    rng = np.random.default_rng(0)
    w = Tensor(rng.normal(size=t.data.shape))
    return ad.sum_all(ad.mul(t, w, tape), tape)


def check_op(build, arrays, eps=1e-5):
    """`build(tensors, tape)` returns the op output; checks every input gradient."""
    tensors = [Tensor(a) for a in arrays]

    tape = Tape()
    out = scalarize(build(tensors, tape), tape)
    ad.backward(tape, out)

    for k, t in enumerate(tensors):
        def f():
            fresh = [Tensor(a.data) for a in tensors]
            return float(scalarize(build(fresh, None), None).data)
        num = central_diff(f, t.data, eps)
        analytic = t.grad if t.grad is not None else np.zeros_like(t.data)
        assert rel_err(analytic, num) < TOL, f"input {k}"


def test_matmul_hand_example():
    out = ad.matmul(Tensor([[1.0, 2.0], [3.0, 4.0]]), Tensor([[1.0], [1.0]]))
    assert np.array_equal(out.data, [[3.0], [7.0]])


def test_matmul_shape_error():
    with pytest.raises(ad.ShapeError) as err:
        ad.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))
    assert "(2, 3)" in str(err.value)


def test_softmax_symmetry_and_rows():
    out = ad.softmax(Tensor([[0.0, 0.0]]))
    assert np.allclose(out.data, [[0.5, 0.5]])
    rng = np.random.default_rng(1)
    x = rng.uniform(-50, 50, size=(7, 9))
    s = ad.softmax(Tensor(x)).data
    assert np.all(np.isfinite(s))
    assert np.max(np.abs(s.sum(axis=-1) - 1.0)) < 1e-12


def test_sigmoid_gradient_at_zero():
    x = Tensor(np.zeros((1, 1)))
    tape = Tape()
    out = ad.sum_all(ad.sigmoid(x, tape), tape)
    ad.backward(tape, out)
    assert abs(x.grad[0, 0] - 0.25) < 1e-12


def test_sum_gradient_is_ones():
    w = Tensor(np.arange(6.0).reshape(2, 3))
    tape = Tape()
    ad.backward(tape, ad.sum_all(w, tape))
    assert np.array_equal(w.grad, np.ones((2, 3)))


def test_dropout_p0_identity_and_eval_identity(rng):
    x = Tensor(np.ones((4, 4)))
    assert ad.dropout(x, 0.0, True, rng) is x
    assert ad.dropout(x, 0.9, False, rng) is x


def test_dropout_scaling_and_gradient(rng):
    x = Tensor(np.ones((30, 30)))
    tape = Tape()
    out = ad.dropout(x, 0.5, True, np.random.default_rng(5), tape)
    survivors = out.data[out.data != 0]
    assert np.allclose(survivors, 2.0)  # inverted scaling
    ad.backward(tape, ad.sum_all(out, tape))
    assert np.array_equal(x.grad != 0, out.data != 0)

    def f():
        r = np.random.default_rng(5)  # same mask every evaluation
        return float(ad.sum_all(ad.dropout(Tensor(x.data), 0.5, True, r)).data)

    num = central_diff(f, x.data)
    assert rel_err(x.grad, num) < TOL


def test_backward_requires_scalar():
    x = Tensor(np.ones((2, 2)))
    tape = Tape()
    y = ad.tanh(x, tape)
    with pytest.raises(ad.ShapeError):
        ad.backward(tape, y)


def test_gradcheck_every_op(rng):
    cases = [
        lambda ts, tp: ad.matmul(ts[0], ts[1], tp),
        lambda ts, tp: ad.add(ts[0], ts[2], tp),
        lambda ts, tp: ad.add(ts[0], ts[3], tp),          # broadcast bias
        lambda ts, tp: ad.mul(ts[0], ts[2], tp),
        lambda ts, tp: ad.mul(ts[0], ts[4], tp),          # broadcast column
        lambda ts, tp: ad.concat([ts[0], ts[2]], tp),
        lambda ts, tp: ad.vstack([ts[0], ts[2]], tp),
        lambda ts, tp: ad.row(ts[0], 1, tp),
        lambda ts, tp: ad.slice_cols(ts[0], 1, 3, tp),
        lambda ts, tp: ad.sigmoid(ts[0], tp),
        lambda ts, tp: ad.tanh(ts[0], tp),
        lambda ts, tp: ad.softmax(ts[0], tp),
        lambda ts, tp: ad.log_softmax(ts[0], tp),
        lambda ts, tp: ad.rowsum(ts[0], tp),
        lambda ts, tp: ad.embedding_lookup(ts[0], np.array([0, 2, 2, 1]), tp),
        lambda ts, tp: ad.pick(ts[0], np.array([0, 3, 1]), tp),
        lambda ts, tp: ad.scale(ts[0], -1.7, tp),
    ]
    for trial in range(3):
        arrays = [
            rng.normal(size=(3, 4)),
            rng.normal(size=(4, 2)),
            rng.normal(size=(3, 4)),
            rng.normal(size=(4,)),
            rng.normal(size=(3, 1)),
        ]
        for i, case in enumerate(cases):
            check_op(case, arrays)


def test_composition_gradcheck(rng):
    # small LSTM-shaped composition exercises op chaining on one tape
    x = Tensor(rng.normal(size=(2, 3)))
    W = Tensor(rng.normal(size=(5, 8)))
    b = Tensor(rng.normal(size=(8,)))
    h0 = Tensor(np.zeros((2, 2)))

    def forward(xs, Ws, bs, tape):
        z = ad.concat([xs, h0], tape)
        g = ad.add(ad.matmul(z, Ws, tape), bs, tape)
        i = ad.sigmoid(ad.slice_cols(g, 0, 2, tape), tape)
        f = ad.sigmoid(ad.slice_cols(g, 2, 4, tape), tape)
        u = ad.tanh(ad.slice_cols(g, 4, 6, tape), tape)
        o = ad.sigmoid(ad.slice_cols(g, 6, 8, tape), tape)
        c = ad.mul(ad.mul(f, i, tape), u, tape)
        h = ad.mul(o, ad.tanh(c, tape), tape)
        return ad.sum_all(ad.softmax(h, tape), tape)

    tape = Tape()
    out = forward(x, W, b, tape)
    ad.backward(tape, out)
    for t in (x, W, b):
        num = central_diff(lambda: float(forward(Tensor(x.data), Tensor(W.data),
                                                 Tensor(b.data), None).data), t.data)
        assert rel_err(t.grad, num) < TOL


def test_determinism_bit_identical(rng):
    def run():
        r = np.random.default_rng(77)
        x = Tensor(r.normal(size=(4, 6)))
        W = Tensor(r.normal(size=(6, 3)))
        tape = Tape()
        out = ad.softmax(ad.matmul(ad.dropout(x, 0.3, True, r, tape), W, tape), tape)
        loss = ad.sum_all(ad.mul(out, out, tape), tape)
        ad.backward(tape, loss)
        return out.data.copy(), x.grad.copy(), W.grad.copy()

    a = run()
    b = run()
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


def test_check_finite_mode():
    ad.CHECK_FINITE = True
    try:
        with pytest.raises(FloatingPointError):
            ad.scale(Tensor([np.inf]), 1.0)
    finally:
        ad.CHECK_FINITE = False


def test_concat_vstack_shape_errors():
    with pytest.raises(ad.ShapeError):
        ad.concat([Tensor(np.ones((2, 2))), Tensor(np.ones((3, 2)))])
    with pytest.raises(ad.ShapeError):
        ad.vstack([Tensor(np.ones((2, 2))), Tensor(np.ones((2, 3)))])
    with pytest.raises(ad.ShapeError):
        ad.add(Tensor(np.ones((2, 2))), Tensor(np.ones((3, 3))))

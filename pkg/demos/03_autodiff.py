"""
The reverse-mode tape, by hand
==============================

Builds a few expressions on the autodiff tape, checks their gradients
against central differences, and trains a small logistic regression with
the Adam stepper. Everything the encoder and decoder do reduces to the
primitives used here.
"""

import numpy as np

import ckgc.autodiff as ad
from ckgc.optim import OptimizerState, adam_step

rng = np.random.default_rng(0)

# ---- a scalar expression and its exact gradient --------------------------
# loss = sum(sigmoid(x @ w)) for a 3x2 x and 2x1 w
x = ad.tensor(rng.normal(size=(3, 2)), requires_grad=True, name="x")
w = ad.tensor(rng.normal(size=(2, 1)), requires_grad=True, name="w")

tape = ad.Tape()
loss = ad.tsum(tape, ad.sigmoid(tape, ad.matmul(tape, x, w)))
grads = ad.backward(tape, loss)

s = 1.0 / (1.0 + np.exp(-(x.value @ w.value)))
manual_w = x.value.T @ (s * (1 - s))
print("loss          ", float(loss.value))
print("|grad w - manual|", float(np.abs(grads[w] - manual_w).max()))
assert np.allclose(grads[w], manual_w)

# ---- grad_check compares the tape against central differences ------------
def f(tape, a, b):
    h = ad.relu(tape, ad.matmul(tape, a, b))
    return ad.tmean(tape, ad.mul(tape, h, h))

a = ad.tensor(rng.normal(size=(4, 3)), requires_grad=True)
b = ad.tensor(rng.normal(size=(3, 5)), requires_grad=True)
err = ad.grad_check(f, [a, b])
print("grad_check relative error:", err)
assert err < 1e-6

# structural ops carry gradients too: permute, conv, reshape, concat
def g(tape, h, k):
    row = ad.permute_columns(tape, h, np.array([2, 0, 3, 1]))
    stack = ad.concat(tape, [ad.reshape(tape, row, (2, 1, 4)),
                             ad.reshape(tape, row, (2, 1, 4))], axis=1)
    fmap = ad.conv1d_same(tape, stack, k)
    return ad.tsum(tape, ad.relu(tape, fmap))

h = ad.tensor(rng.normal(size=(2, 4)), requires_grad=True)
k = ad.tensor(rng.normal(size=(3, 2, 2)), requires_grad=True)
print("structural-op grad error: ", ad.grad_check(g, [h, k]))

# ---- logistic regression with Adam ----------------------------------------
# two gaussian blobs, one weight vector, binary cross entropy from logits
n = 200
pts = np.vstack([rng.normal(loc=-1.0, size=(n // 2, 2)),
                 rng.normal(loc=+1.0, size=(n // 2, 2))])
labels = np.repeat([[0.0], [1.0]], n // 2, axis=0)

weight = ad.tensor(np.zeros((2, 1)), requires_grad=True, name="w")
bias = ad.tensor(np.zeros((1, 1)), requires_grad=True, name="b")
params = {"w": weight, "b": bias}
state = OptimizerState(lr=0.05)

for step in range(1, 201):
    tape = ad.Tape()
    logits = ad.add(tape, ad.matmul(tape, ad.tensor(pts), weight),
                    ad.matmul(tape, ad.tensor(np.ones((n, 1))), bias))
    loss = ad.bce_with_logits(tape, logits, labels)
    adam_step(params, ad.backward(tape, loss), state)
    if step % 50 == 0:
        acc = float(np.mean((pts @ weight.value + bias.value > 0) == (labels > 0.5)))
        print(f"step={step} loss={float(loss.value):.4f} acc={acc:.3f}")

assert float(loss.value) < 0.2
print("fitted weights:", weight.value.ravel().round(3), "bias:", round(float(bias.value), 3))

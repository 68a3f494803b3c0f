"""Central finite-difference gradient oracle, independent of the tape."""

import numpy as np

from causalgen.autodiff import backward


def fd_gradients(build_loss, params, h=1e-5):
    """Numeric d(loss)/d(p) for each parameter by central differences.

    `build_loss` must recompute the scalar loss from scratch on every call so
    the perturbed parameter value is actually used.
    """
    grads = []
    for p in params:
        g = np.zeros_like(p.data)
        flat = p.data.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + h
            up = float(build_loss().data)
            flat[i] = saved - h
            down = float(build_loss().data)
            flat[i] = saved
            gflat[i] = (up - down) / (2.0 * h)
        grads.append(g)
    return grads


def analytic_gradients(build_loss, params):
    for p in params:
        p.zero_grad()
    loss = build_loss()
    backward(loss)
    return [p.grad.copy() for p in params]


def max_rel_error(analytic, numeric, floor=1e-3):
    """Worst elementwise relative error, with a denominator floor so
    near-zero gradients are compared absolutely at the floor scale."""
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float((np.abs(a - n) / denom).max()))
    return worst


def check_gradients(build_loss, params, h=1e-5, rtol=1e-4):
    err = max_rel_error(analytic_gradients(build_loss, params),
                        fd_gradients(build_loss, params, h=h))
    assert err <= rtol, f"gradient mismatch: max relative error {err:.3e}"
    return err

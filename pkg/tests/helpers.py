"""Shared test utilities: random model construction and independent oracles.

The oracles here deliberately avoid the package's kernel code paths: the
forward oracle enumerates rules one by one in pure Python with math.exp, and
the metric references are plain accumulation loops.
"""

import itertools
import math

import numpy as np

import neurofuzz as nf


def random_model(rng, n_inputs=None, mf_counts=None, coeff_scale=1.0):
    """Random valid grid-partition model with up to 3 inputs x 3 MFs."""
    if n_inputs is None:
        n_inputs = int(rng.integers(1, 4))
    if mf_counts is None:
        mf_counts = [int(rng.integers(1, 4)) for _ in range(n_inputs)]
    inputs = []
    for d in range(n_inputs):
        mfs = [nf.MembershipFunction(float(rng.uniform(-0.5, 1.5)),
                                     float(rng.uniform(0.05, 0.6)))
               for _ in range(mf_counts[d])]
        inputs.append(nf.InputVariable(f"x{d}", mfs))
    rules = []
    for premise in itertools.product(*(range(c) for c in mf_counts)):
        coeffs = coeff_scale * rng.standard_normal(n_inputs + 1)
        rules.append(nf.Rule(premise, coeffs))
    return nf.AnfisModel(inputs, rules)


def oracle_forward(model, x):
    """Independent rule-by-rule forward evaluation in pure Python."""
    total = 0.0
    acc = 0.0
    for rule in model.rules:
        w = 1.0
        for d, idx in enumerate(rule.premise):
            mf = model.inputs[d].mfs[idx]
            z = (float(x[d]) - mf.center) / mf.sigma
            w *= max(math.exp(-0.5 * z * z), 5e-324)
        f = rule.coefficients[-1]
        for d in range(len(x)):
            f += rule.coefficients[d] * float(x[d])
        total += w
        acc += w * float(f)
    return acc / total


def naive_rmse(a, p):
    s = 0.0
    for x, y in zip(a, p):
        s += (x - y) ** 2
    return math.sqrt(s / len(a))


def naive_mae(a, p):
    s = 0.0
    for x, y in zip(a, p):
        s += abs(x - y)
    return s / len(a)


def naive_r_error_ratio(a, p):
    num = 0.0
    den = 0.0
    for x, y in zip(a, p):
        num += (x - y) ** 2
        den += x * x
    return math.sqrt(1.0 - num / den)


def naive_pearson(a, p):
    n = len(a)
    am = sum(a) / n
    pm = sum(p) / n
    cov = sa = sp = 0.0
    for x, y in zip(a, p):
        cov += (x - am) * (y - pm)
        sa += (x - am) ** 2
        sp += (y - pm) ** 2
    return cov / math.sqrt(sa * sp)


def naive_r_squared(a, p):
    n = len(a)
    am = sum(a) / n
    ss_res = ss_tot = 0.0
    for x, y in zip(a, p):
        ss_res += (x - y) ** 2
        ss_tot += (x - am) ** 2
    return 1.0 - ss_res / ss_tot


def naive_deviation(a, p):
    devs = [abs(x - y) for x, y in zip(a, p)]
    return max(devs), sum(devs) / len(devs)


def fd_premise_gradient(model, x, eps=1e-6):
    """Central finite differences of the forward output w.r.t. (z, sigma)."""
    base = nf.flatten_params(model)
    out = np.empty_like(base)
    for k in range(base.size):
        up = base.copy()
        up[k] += eps
        down = base.copy()
        down[k] -= eps
        mu = model.copy()
        nf.restore_params(mu, up)
        md = model.copy()
        nf.restore_params(md, down)
        out[k] = (nf.forward(mu, x).output - nf.forward(md, x).output) / (2 * eps)
    return out

"""Pure numpy implementation of the componentwise kernels.

Every function here has a twin in ``_ckernels.pyx``; both must return
bitwise-identical arrays, so the floating point expressions are written in
the same order in the two files.
"""
import math

import numpy as np

NAME = "python"


def project_box(x, lower, upper):
    return np.minimum(np.maximum(x, lower), upper) + 0.0


def soft_threshold(c, lam):
    # the trailing + 0.0 turns -0.0 into +0.0
    return np.sign(c) * np.maximum(np.abs(c) - lam, 0.0) + 0.0


def hard_threshold(c, gamma, keep_ties):
    a = np.abs(c)
    keep = a >= gamma if keep_ties else a > gamma
    return np.where(keep, c, 0.0) + 0.0


def prox_l0_box_1d(c, lam, lo, hi, keep_ties):
    p = min(max(c, lo), hi)
    if lo > 0.0 or hi < 0.0:
        return p
    if p == 0.0:
        return 0.0
    if lo <= c <= hi:
        gamma = math.sqrt(2.0 * lam)
        a = abs(c)
        keep = a >= gamma if keep_ties else a > gamma
    else:
        h_nz = lam + 0.5 * ((p - c) * (p - c))
        h_zero = 0.5 * (c * c)
        keep = h_nz <= h_zero if keep_ties else h_nz < h_zero
    return p if keep else 0.0


def prox_l0_box(c, lam, lower, upper, penalized, keep_ties):
    p = np.minimum(np.maximum(c, lower), upper)
    inside = (c >= lower) & (c <= upper)
    gamma = math.sqrt(2.0 * lam)
    a = np.abs(c)
    d = p - c
    h_nz = lam + 0.5 * (d * d)
    h_zero = 0.5 * (c * c)
    if keep_ties:
        keep = np.where(inside, a >= gamma, h_nz <= h_zero)
    else:
        keep = np.where(inside, a > gamma, h_nz < h_zero)
    keep |= (lower > 0.0) | (upper < 0.0)
    if penalized is not None:
        keep |= ~penalized
    return np.where(keep, p, 0.0) + 0.0

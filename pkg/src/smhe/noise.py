"""Worst-case noise bounds used for budget tracking, plus the published bounds.

Bounds are infinity-norm bounds on the decryption phase error.  ``g`` below
is the Gaussian rejection bound; key-distribution samples are bounded by
``B_chi``.
"""

from __future__ import annotations

import math

from smhe.ring import BFV, Params


def fresh(params: Params) -> int:
    """w*e + e0 + s*e1 for w, s from chi and Gaussian e, e0, e1."""
    return (2 * params.N * params.B_chi + 1) * params.gauss_bound


def cz_cross(params: Params) -> int:
    """<sk', cz> - r(b - b') = r*e' + e0 + s'*e1."""
    return (2 * params.N * params.B_chi + 1) * params.gauss_bound


def extend(params: Params) -> int:
    """<H(x), e> for one decomposition against a Gaussian gadget error."""
    return params.tau * params.N * params.B_H * params.gauss_bound


def smudging(params: Params) -> int:
    return math.ceil(6 * params.smudging_sigma)


def relin_pair(params: Params) -> int:
    """Relinearization error contributed by one (i, j) tensor entry."""
    return (2 * params.N * params.B_chi + 1) * extend(params)


def capacity(params: Params, msg_bound: int = 0) -> int:
    """Largest phase error that still decrypts correctly."""
    if params.scheme == BFV:
        return params.Q // (2 * params.t) - 1
    return params.Q // 2 - msg_bound - 1


def bfv_tensor(params: Params, n: int, e1: int, e2: int) -> int:
    """Error of round(t/Q * c (x) c') under (1, s_1..s_n) before relinearization."""
    N, t, Q = params.N, params.t, params.Q
    keyl1 = 1 + n * N * params.B_chi
    I1 = I2 = keyl1 // 2 + 2
    E1, E2 = e1 + 1, e2 + 1
    return (N * t * (E1 + E2) + N * t * (E1 * I2 + E2 * I1)
            + (N * t * E1 * E2) // Q + 1 + (keyl1 * keyl1) // 2 + 1)


def ckks_tensor(params: Params, e1: int, e2: int, m1: int, m2: int) -> int:
    return params.N * (m1 * e2 + m2 * e1 + e1 * e2)


def masking_correctness(params: Params) -> int:
    """(2N^2 + 4N) B + tau N B B_H with B the small-sample bound."""
    B, N = params.noise_scale, params.N
    return (2 * N * N + 4 * N) * B + params.tau * N * B * params.B_H


def aggregation(params: Params, m: int) -> int:
    """(3m^3 + 6m^2 + m) B + 2 tau m^2 B B_H for an m-client aggregate."""
    B = params.noise_scale
    return (3 * m**3 + 6 * m**2 + m) * B + 2 * params.tau * m * m * B * params.B_H

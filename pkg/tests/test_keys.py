import numpy as np
import pytest

from smhe import noise
from smhe.evaluator import relinearize
from smhe.keys import keygen
from smhe.ring import sample_uniform


def test_public_key_relation(small, small_parties):
    for kp in small_parties:
        assert (kp.pk.b + kp.pk.a * kp.sk.s).inf_norm() <= small.gauss_bound
        assert kp.sk.s.inf_norm() <= small.B_chi


def test_crs_shared_but_keys_differ(small):
    a = keygen(small, np.random.default_rng(1), 1)
    b = keygen(small, np.random.default_rng(2), 2)
    assert a.pk.a == b.pk.a == small.crs[0]
    assert a.pk.b != b.pk.b


def test_eval_key_b_vector(small, small_parties):
    kp = small_parties[1]
    for j in range(small.tau):
        assert (kp.evk.b_vec[j] + small.crs[j] * kp.sk.s).inf_norm() <= small.gauss_bound


@pytest.mark.parametrize("i,j", [(1, 1), (1, 2), (2, 1)])
def test_relinearization_identity(small, small_parties, i, j):
    """A lone tensor entry c at (i, j) relinearizes to a phase of c*s_i*s_j + small."""
    kps = small_parties[:2]
    c = sample_uniform(np.random.default_rng(10 * i + j), small)
    comps, pairs = relinearize({(i, j): c}, 2, {k.index: k.evk for k in kps}, small)
    assert pairs == 1
    s = {k.index: k.sk.s for k in kps}
    phase = comps[0] + comps[1] * s[1] + comps[2] * s[2]
    err = phase - c * s[i] * s[j]
    assert err.inf_norm() <= noise.relin_pair(small)


def test_indices_are_one_based(small):
    with pytest.raises(ValueError):
        keygen(small, np.random.default_rng(0), 0)


def test_keygen_deterministic(small):
    a = keygen(small, np.random.default_rng(9), 1)
    b = keygen(small, np.random.default_rng(9), 1)
    assert a.sk == b.sk and a.pk == b.pk and a.evk == b.evk

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from hollowforge import EllipsePacker, Hollower
from hollowforge.errors import ConfigError
from hollowforge.fixtures import bunny_outline
from hollowforge.mesh import extrude_polygon

RECT = [[0, 0], [120, 0], [120, 90], [0, 90]]


def test_packer_params_and_clone():
    est = EllipsePacker(delta_wall=2.0, max_ellipses=5)
    assert est.get_params()["delta_wall"] == 2.0
    c = clone(est).set_params(rho=0.5)
    assert c.rho == 0.5 and est.rho == 0.7


def test_packer_fit_transform_predict():
    est = EllipsePacker(delta_wall=2.0, a_min=0.5, max_ellipses=8)
    with pytest.raises(NotFittedError):
        est.predict([[0, 0]])
    E = est.fit_transform(bunny_outline())
    assert len(E) == 1 and E[0].shape == (8, 4)
    centres = E[0][:, :2]
    assert np.array_equal(est.predict(centres), np.arange(8))
    assert est.predict([[1e6, 1e6]])[0] == -1
    assert 0 < est.score() < 1
    again = est.transform([RECT, bunny_outline()])
    assert np.array_equal(again[1], E[0])


def test_packer_rejects_bad_params():
    with pytest.raises(ConfigError):
        EllipsePacker(rho=2.0).fit(RECT)


def test_hollower_predict_material():
    m = extrude_polygon(RECT, 7 * 3.2)
    est = Hollower(axis="x", max_tracks=1).fit(m)
    assert est.n_tracks_ == 1 and est.hollowed_.is_closed_manifold
    (t,) = est.stack_.tracks.values()
    k = t.seed_slice
    e = est.stack_.ellipse(t.id, k)
    st = est.stack_
    inside_void = st.offsets[k] * st.normal + e.cx * st.u + e.cy * st.v
    solid = st.offsets[k] * st.normal + 2.0 * st.u + 2.0 * st.v
    assert est.predict([inside_void, solid]).tolist() == [False, True]
    assert est.hollowed_.volume < m.volume

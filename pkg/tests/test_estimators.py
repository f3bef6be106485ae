import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import Pipeline

from skytrace.estimators import ChannelMapper, PopulationMeanThreshold, RelativeThreshold
from skytrace.geometry import Building
from skytrace.validation import check_positions, check_spectra, check_unit_vector

from conftest import make_scene, rect


@pytest.fixture
def fitted_mapper(ground_scene):
    return ChannelMapper(tx_position=(0, 0, 10)).fit(ground_scene)


SPECTRA = np.array(
    [
        [1.0, 0.5, 0.01, 0.001],
        [2.0, 0.02, 0.0, 0.0],
        [np.nan, np.nan, np.nan, np.nan],
        [0.5, 0.4, 0.3, 0.2],
    ]
)


class TestSklearnProtocol:
    def test_get_set_params_roundtrip(self):
        m = ChannelMapper(carrier_freq_hz=2e9, tx_power_w=3.0)
        params = m.get_params()
        assert params["carrier_freq_hz"] == 2e9
        m2 = clone(m).set_params(tx_power_w=7.0)
        assert m2.get_params()["tx_power_w"] == 7.0
        assert m.get_params()["tx_power_w"] == 3.0

    def test_threshold_estimators_cloneable(self):
        for est in (RelativeThreshold(42.0), PopulationMeanThreshold("all")):
            cloned = clone(est)
            assert cloned.get_params() == est.get_params()

    def test_unfitted_raises(self, ground_scene):
        with pytest.raises(NotFittedError):
            ChannelMapper().transform([[0, 0, 30]])
        with pytest.raises(NotFittedError):
            PopulationMeanThreshold().transform(SPECTRA)

    def test_fit_returns_self(self, ground_scene):
        m = ChannelMapper(tx_position=(0, 0, 10))
        assert m.fit(ground_scene) is m
        rel = RelativeThreshold()
        assert rel.fit(SPECTRA) is rel

    def test_fit_rejects_non_scene(self):
        with pytest.raises(TypeError, match="Scene"):
            ChannelMapper().fit(np.zeros((3, 3)))

    def test_pipeline_composition(self):
        pipe = Pipeline([("rank", PopulationMeanThreshold())])
        ranks = pipe.fit(SPECTRA).predict(SPECTRA)
        assert ranks.shape == (4,)
        assert ranks[2] == -1


class TestChannelMapper:
    def test_transform_shape_and_nan_rows(self, slab_scene):
        m = ChannelMapper(tx_position=(0, 0, 10)).fit(slab_scene)
        X = np.array([[50, 0, 3], [120, 0, 60], [-60, 0, 30]])  # first is inside the slab
        S = m.transform(X)
        assert S.shape == (3, 4)
        assert np.all(np.isnan(S[0]))
        assert np.all(np.isfinite(S[1:]))
        assert np.all(np.diff(S[1:], axis=1) <= 1e-12)

    def test_predict_matches_evaluate(self, fitted_mapper):
        X = np.array([[100, 0, 30], [300, 50, 70]])
        r = fitted_mapper.predict(X)
        ev = fitted_mapper.evaluate(X)
        assert np.allclose(r, [e.rssi_dbm for e in ev])

    def test_single_position_accepted(self, fitted_mapper):
        assert fitted_mapper.predict([100, 0, 30]).shape == (1,)

    def test_evaluate_fields(self, slab_scene):
        m = ChannelMapper(tx_position=(0, 0, 10)).fit(slab_scene)
        inside, outside = m.evaluate([[50, 0, 3], [120, 0, 60]])
        assert inside.flag == "B"
        assert inside.rssi_dbm is None and inside.sigma is None and inside.cn_db is None
        assert inside.ranks == {}
        assert outside.flag == "covered"
        assert outside.sigma is not None and outside.rssi_dbm is not None

    def test_fit_transform_needs_positions(self, ground_scene):
        m = ChannelMapper(tx_position=(0, 0, 10))
        with pytest.raises(ValueError, match="positions"):
            m.fit_transform(ground_scene)
        S = m.fit_transform(ground_scene, positions=[[100, 0, 30]])
        assert S.shape == (1, 4)

    def test_path_sets_have_amplitudes(self, fitted_mapper):
        (ps,) = fitted_mapper.path_sets([[100, 0, 30]])
        assert all(p.amplitude is not None for p in ps.paths)

    def test_fitted_mapper_pickles(self, fitted_mapper):
        # Worker pools ship the fitted mapper to subprocesses.
        import pickle

        clone_ = pickle.loads(pickle.dumps(fitted_mapper))
        X = [[150, -30, 70]]
        assert np.allclose(clone_.predict(X), fitted_mapper.predict(X))
        assert np.allclose(clone_.transform(X), fitted_mapper.transform(X))

    def test_incoherent_mode_plumbs_through(self, ground_scene):
        coh = ChannelMapper(tx_position=(0, 0, 10), rssi_mode="coherent").fit(ground_scene)
        inc = ChannelMapper(tx_position=(0, 0, 10), rssi_mode="incoherent").fit(ground_scene)
        X = [[137, 11, 43]]
        assert coh.predict(X)[0] != inc.predict(X)[0]


class TestRelativeThreshold:
    def test_transform_and_predict(self):
        rel = RelativeThreshold(10.0).fit(SPECTRA)
        T = rel.transform(SPECTRA)
        assert np.allclose(T[0], [1.0, 0.5, 0.0, 0.0])
        assert np.all(np.isnan(T[2]))
        assert rel.predict(SPECTRA).tolist() == [2, 1, -1, 4]

    def test_bad_factor(self):
        with pytest.raises(ValueError):
            RelativeThreshold(1.0).fit(SPECTRA)


class TestPopulationMeanThreshold:
    def test_learns_covered_means(self):
        est = PopulationMeanThreshold().fit(SPECTRA)
        expected = np.nanmean(SPECTRA[[0, 1, 3]], axis=0)
        assert np.allclose(est.means_, expected)

    def test_population_all(self):
        est = PopulationMeanThreshold(population="all").fit(SPECTRA)
        expected = np.nan_to_num(SPECTRA).mean(axis=0)
        assert np.allclose(est.means_, expected)

    def test_all_nan_fit_errors(self):
        with pytest.raises(ValueError, match="no covered sites"):
            PopulationMeanThreshold().fit(np.full((3, 4), np.nan))

    def test_predict_marks_uncovered(self):
        est = PopulationMeanThreshold().fit(SPECTRA)
        assert est.predict(SPECTRA)[2] == -1


class TestValidation:
    def test_check_positions(self):
        assert check_positions([1, 2, 3]).shape == (1, 3)
        with pytest.raises(ValueError):
            check_positions([[1, 2]])
        with pytest.raises(ValueError):
            check_positions([[1, 2, np.inf]])

    def test_check_spectra(self):
        with pytest.raises(ValueError, match="descending"):
            check_spectra(np.array([[0.1, 0.5]]))
        with pytest.raises(ValueError, match="non-negative"):
            check_spectra(np.array([[0.5, -0.1]]))
        with pytest.raises(ValueError, match="fully NaN"):
            check_spectra(np.array([[np.nan, 0.5]]))
        ok = check_spectra(SPECTRA)
        assert ok.shape == SPECTRA.shape

    def test_check_unit_vector(self):
        v = check_unit_vector((0, 0, 2))
        assert np.allclose(v, [0, 0, 1])
        with pytest.raises(ValueError):
            check_unit_vector((0, 0, 0))


class TestEndToEndRanks:
    def test_slab_scene_reflections_raise_rank(self):
        # A receiver beside a tall wall sees LoS + ground + wall paths; the
        # permissive criterion keeps more layers than the strict one.
        scene = make_scene(
            [Building(rect(80, 0, 10, 120), 35.0)], bounds=[[-400, -400], [400, 400]]
        )
        m = ChannelMapper(tx_position=(0, 0, 10)).fit(scene)
        S = m.transform([[60, 10, 20]])
        strict = RelativeThreshold(10.0).fit(S).predict(S)[0]
        permissive = RelativeThreshold(1e4).fit(S).predict(S)[0]
        assert 1 <= strict <= permissive <= 4
        assert permissive >= 2

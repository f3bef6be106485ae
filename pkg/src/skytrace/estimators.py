"""Scikit-learn style estimators wrapping the tracing and rank pipeline.

``ChannelMapper`` is fitted to a scene and then maps receiver positions to
singular spectra (``transform``) or RSSI (``predict``), like a spatial
regressor bound to its world. The two rank criteria are transformers over
stacked spectra matrices: ``RelativeThreshold`` is stateless, while
``PopulationMeanThreshold`` learns per-order means from the population it
is fitted on, so the usual fit/transform split carries the two-pass sweep.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .geometry import Scene
from .mimo import ArrayConfig, synthesize_channel
from .propagation import (
    SPEED_OF_LIGHT,
    PathEnumerator,
    PathSet,
    attach_amplitudes,
    rssi,
)
from .rankanalysis import (
    SiteResult,
    apply_threshold,
    condition_number_db,
    singular_values,
    spectral_means,
)
from .validation import check_positions, check_spectra, check_unit_vector


class ChannelMapper(BaseEstimator):
    """Site-specific MIMO channel evaluator over receiver positions.

    Parameters
    ----------
    carrier_freq_hz : float
        Carrier frequency in Hz.
    tx_position : tuple of float
        Transmitter (east, north, height) in meters, outdoors.
    tx_power_w : float
        Transmit power in watts (RSSI scale only).
    max_reflections : int
        Specular reflection order bound, 0..2.
    n_elements : int
        Elements per uniform linear array at both ends.
    d_tx_wavelengths, d_rx_wavelengths : float
        Element spacings in wavelengths.
    tx_array_axis, rx_array_axis : tuple of float
        Array orientations (normalized at fit time).
    rssi_mode : str
        'coherent' phasor sum or 'incoherent' power sum.
    """

    def __init__(
        self,
        carrier_freq_hz: float = 3.4e9,
        tx_position=(0.0, 0.0, 10.0),
        tx_power_w: float = 10.0,
        max_reflections: int = 2,
        n_elements: int = 4,
        d_tx_wavelengths: float = 1.0,
        d_rx_wavelengths: float = 0.5,
        tx_array_axis=(1.0, 0.0, 0.0),
        rx_array_axis=(1.0, 0.0, 0.0),
        rssi_mode: str = "coherent",
    ):
        self.carrier_freq_hz = carrier_freq_hz
        self.tx_position = tx_position
        self.tx_power_w = tx_power_w
        self.max_reflections = max_reflections
        self.n_elements = n_elements
        self.d_tx_wavelengths = d_tx_wavelengths
        self.d_rx_wavelengths = d_rx_wavelengths
        self.tx_array_axis = tx_array_axis
        self.rx_array_axis = rx_array_axis
        self.rssi_mode = rssi_mode

    def fit(self, X: Scene, y=None) -> "ChannelMapper":
        """Bind the mapper to a scene and precompute the transmitter images."""
        if not isinstance(X, Scene):
            raise TypeError(f"ChannelMapper.fit expects a Scene, got {type(X).__name__}")
        if self.carrier_freq_hz <= 0 or self.tx_power_w <= 0:
            raise ValueError("carrier_freq_hz and tx_power_w must be > 0")
        self.scene_ = X
        self.wavelength_ = SPEED_OF_LIGHT / self.carrier_freq_hz
        self.tx_ = np.asarray(self.tx_position, dtype=float)
        self.enumerator_ = PathEnumerator(X, self.tx_, self.max_reflections)
        self.tx_array_ = ArrayConfig(
            self.n_elements,
            self.d_tx_wavelengths,
            tuple(check_unit_vector(self.tx_array_axis, "tx_array_axis")),
            tuple(self.tx_),
        )
        self.rx_array_ = ArrayConfig(
            self.n_elements,
            self.d_rx_wavelengths,
            tuple(check_unit_vector(self.rx_array_axis, "rx_array_axis")),
        )
        return self

    def path_sets(self, X) -> list[PathSet]:
        """Amplitude-attached specular path sets for each receiver position."""
        check_is_fitted(self, "scene_")
        X = check_positions(X)
        return [
            attach_amplitudes(self.enumerator_.paths_to(p), self.scene_, self.wavelength_)
            for p in X
        ]

    def evaluate(self, X) -> list[SiteResult]:
        """Full per-site records: coverage flag, RSSI, spectrum, condition number.

        Rank fields stay empty here; apply a rank criterion to the stacked
        spectra to fill them (the population-mean criterion needs the whole
        layer before any rank is defined).
        """
        check_is_fitted(self, "scene_")
        X = check_positions(X)
        out = []
        for pos in X:
            ps = attach_amplitudes(
                self.enumerator_.paths_to(pos), self.scene_, self.wavelength_
            )
            if not ps.covered:
                out.append(SiteResult(position=pos, flag=ps.flag))
                continue
            h = synthesize_channel(ps, self.tx_array_, self.rx_array_, self.wavelength_)
            sigma = singular_values(h)
            out.append(
                SiteResult(
                    position=pos,
                    flag=ps.flag,
                    rssi_dbm=rssi(ps, self.tx_power_w, self.rssi_mode),
                    sigma=sigma,
                    cn_db=condition_number_db(sigma),
                )
            )
        return out

    def transform(self, X) -> np.ndarray:
        """Map positions to an (n_samples, n_elements) singular-spectra matrix.

        Uncovered sites come back as NaN rows, the convention the rank
        transformers understand.
        """
        results = self.evaluate(X)
        out = np.full((len(results), self.n_elements), np.nan)
        for i, r in enumerate(results):
            if r.sigma is not None:
                out[i] = r.sigma
        return out

    def fit_transform(self, X, y=None, positions=None) -> np.ndarray:
        """Fit on a scene, then transform receiver ``positions``."""
        if positions is None:
            raise ValueError("fit_transform needs positions= (fit consumes the scene)")
        return self.fit(X).transform(positions)

    def predict(self, X) -> np.ndarray:
        """RSSI in dBm per position; NaN for uncovered sites."""
        results = self.evaluate(X)
        return np.array(
            [r.rssi_dbm if r.rssi_dbm is not None else np.nan for r in results]
        )


def _ranks(thresholded: np.ndarray) -> np.ndarray:
    """Surviving-value counts per row, -1 for NaN (uncovered) rows."""
    covered = ~np.isnan(thresholded[:, 0])
    counts = np.count_nonzero(np.nan_to_num(thresholded) > 0.0, axis=1)
    return np.where(covered, counts, -1).astype(int)


class RelativeThreshold(BaseEstimator, TransformerMixin):
    """Rank criterion: keep singular values within ``factor`` of the strongest.

    Stateless, like a Normalizer: ``fit`` only validates. ``transform``
    zeroes sub-threshold values row by row; ``predict`` returns the
    surviving count per row, -1 for NaN (uncovered) rows.
    """

    def __init__(self, factor: float = 100.0):
        self.factor = factor

    def fit(self, X, y=None) -> "RelativeThreshold":
        if self.factor <= 1.0:
            raise ValueError("factor must be > 1")
        self.n_features_in_ = check_spectra(X).shape[1]
        return self

    def transform(self, X) -> np.ndarray:
        if self.factor <= 1.0:
            raise ValueError("factor must be > 1")
        X = check_spectra(X)
        out = np.full_like(X, np.nan)
        for i, row in enumerate(X):
            if not np.isnan(row[0]):
                out[i], _ = apply_threshold(row, row[0] / self.factor)
        return out

    def predict(self, X) -> np.ndarray:
        return _ranks(self.transform(X))


class PopulationMeanThreshold(BaseEstimator, TransformerMixin):
    """Rank criterion thresholding each order at its population mean.

    ``fit`` learns the per-order mean singular values of the receiver
    population (one altitude layer per fit); ``transform``/``predict``
    apply them orderwise. ``population='covered'`` excludes uncovered
    (NaN) rows from the means, ``'all'`` counts them as zero spectra.
    """

    def __init__(self, population: str = "covered"):
        self.population = population

    def fit(self, X, y=None) -> "PopulationMeanThreshold":
        X = check_spectra(X)
        self.means_ = spectral_means(X, self.population)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "means_")
        X = check_spectra(X, self.n_features_in_)
        out = np.full_like(X, np.nan)
        for i, row in enumerate(X):
            if not np.isnan(row[0]):
                out[i], _ = apply_threshold(row, self.means_)
        return out

    def predict(self, X) -> np.ndarray:
        return _ranks(self.transform(X))

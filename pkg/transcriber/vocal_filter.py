"""
Contour filtering with a track-level Gaussian vocal / non-vocal classifier
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union
import logging

import numpy as np
from scipy.stats import multivariate_normal

from transcriber import config
from transcriber.audio_io import BARK_GRID
from transcriber.errors import DegenerateClassError
from transcriber.melody import PitchContour, flatten_contours

logger = logging.getLogger(__name__)

# Keeps the covariance invertible when a class has no energy at all
COVARIANCE_FLOOR = 1e-12


@dataclass
class GaussianClassModel:
    """One multivariate Gaussian per class over the bark features"""
    mu_plus: np.ndarray
    sigma_plus: np.ndarray
    mu_minus: np.ndarray
    sigma_minus: np.ndarray

    def log_densities(self, features: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(log p+(x), log p-(x)) for every row of features"""
        features = np.atleast_2d(features)
        plus = multivariate_normal(self.mu_plus, self.sigma_plus).logpdf(features)
        minus = multivariate_normal(self.mu_minus, self.sigma_minus).logpdf(features)
        return np.atleast_1d(plus), np.atleast_1d(minus)


@dataclass
class VocalPrediction:
    """Raw and smoothed binary vocal decision per frame"""
    v: np.ndarray
    smoothed: np.ndarray

    @property
    def num_vocal(self) -> int:
        return int(self.smoothed.sum())


def regularised_covariance(samples: np.ndarray) -> np.ndarray:
    """Maximum-likelihood covariance plus eps*I, eps = 1e-6 * trace / d"""
    centred = samples - samples.mean(axis=0)
    sigma = centred.T @ centred / len(samples)
    dim = sigma.shape[0]
    eps = max(config.COVARIANCE_REGULARISATION * np.trace(sigma) / dim, COVARIANCE_FLOOR)
    sigma = 0.5 * (sigma + sigma.T)
    return sigma + eps * np.eye(dim)


def align_features(features: np.ndarray, num_frames: int) -> np.ndarray:
    """Bark rows for frames 0..num_frames-1, zero rows past the end"""
    aligned = np.zeros((num_frames, features.shape[1]))
    count = min(num_frames, len(features))
    aligned[:count] = features[:count]
    return aligned


def fit_models(features: np.ndarray, contour: PitchContour) -> GaussianClassModel:
    """
    Fit voiced / unvoiced Gaussians using the melody frames as labels

    Args:
        features: (frames, 12) bark energies on the bark grid (hop 128)
        contour: Melody contour on the melody grid (hop 128)

    Raises:
        DegenerateClassError: A class has fewer than MIN_CLASS_FRAMES frames
    """
    x = align_features(features, contour.num_frames)
    voiced = contour.voiced
    positives, negatives = x[voiced], x[~voiced]

    for label, samples in (('voiced', positives), ('unvoiced', negatives)):
        if len(samples) < config.MIN_CLASS_FRAMES:
            raise DegenerateClassError(label, len(samples), config.MIN_CLASS_FRAMES)

    model = GaussianClassModel(
        mu_plus=positives.mean(axis=0),
        sigma_plus=regularised_covariance(positives),
        mu_minus=negatives.mean(axis=0),
        sigma_minus=regularised_covariance(negatives)
    )
    logger.debug(f"Fitted class models on {len(positives)} voiced / {len(negatives)} unvoiced frames")
    return model


def classify_frames(features: np.ndarray, model: GaussianClassModel) -> np.ndarray:
    """v[n] = 1 where the vocal log density is at least the non-vocal one"""
    if len(features) == 0:
        return np.zeros(0, dtype=np.int8)
    plus, minus = model.log_densities(features)
    return (plus >= minus).astype(np.int8)


def smooth_prediction(v: np.ndarray, window_s: float = config.VOCAL_SMOOTHING_S,
                      frames_per_second: Optional[float] = None) -> np.ndarray:
    """
    Centred binary moving average

    Edge frames average over the truncated window. Output is 1 where the
    average reaches VOCAL_SMOOTHING_THRESHOLD.
    """
    v = np.asarray(v, dtype=np.float64)
    if len(v) == 0:
        return np.zeros(0, dtype=np.int8)

    fps = frames_per_second or BARK_GRID.frames_per_second()
    half = max(int(np.rint(window_s * fps)) // 2, 0)
    cumulative = np.concatenate(([0.0], np.cumsum(v)))
    index = np.arange(len(v))
    lo = np.clip(index - half, 0, len(v))
    hi = np.clip(index + half + 1, 0, len(v))
    average = (cumulative[hi] - cumulative[lo]) / (hi - lo)
    return (average >= config.VOCAL_SMOOTHING_THRESHOLD).astype(np.int8)


def filter_contours(contour: PitchContour, smoothed: np.ndarray) -> PitchContour:
    """Delete every contour that lies entirely outside the vocal regions"""
    v = np.zeros(contour.num_frames, dtype=np.int64)
    count = min(contour.num_frames, len(smoothed))
    v[:count] = np.asarray(smoothed[:count])

    kept = [(start, end) for start, end in contour.contours if v[start:end + 1].sum() > 0]
    removed = len(contour.contours) - len(kept)
    logger.info(f"Contour filter: removed {removed}, kept {len(kept)} contours")
    return contour.with_f0(flatten_contours(contour.f0, kept))


def apply_vocal_filter(contour: PitchContour,
                       features: np.ndarray) -> Tuple[PitchContour, Optional[VocalPrediction]]:
    """
    Fit, classify, smooth and filter in one go

    Returns:
        (filtered contour, prediction); the contour is returned unchanged with
        no prediction when a class is degenerate
    """
    try:
        model = fit_models(features, contour)
    except DegenerateClassError as e:
        logger.warning(f"Contour filtering disabled for this track: {e}")
        return contour, None

    v = classify_frames(align_features(features, contour.num_frames), model)
    prediction = VocalPrediction(v=v, smoothed=smooth_prediction(v))
    return filter_contours(contour, prediction.smoothed), prediction


def write_vocal_csv(prediction: VocalPrediction, path: Union[str, Path],
                    sample_rate: int = config.SAMPLE_RATE):
    """Dump time_s,v_raw,v_smooth"""
    times = BARK_GRID.times(len(prediction.v), sample_rate)
    table = np.column_stack([times, prediction.v, prediction.smoothed])
    np.savetxt(path, table, delimiter=',', header='time_s,v_raw,v_smooth',
               comments='', fmt=['%.6f', '%d', '%d'])
    logger.info(f"Wrote vocal prediction to {path}")

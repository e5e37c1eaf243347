"""scikit-learn style wrappers so corruption, feature extraction and scoring
compose with pipelines, ``clone`` and ``get_params``.

Image batches are either a sequence of :class:`~noisyiqa.image.Image` or a
uint8 array shaped ``(n, h, w)`` or ``(n, h, w, 3)``.
"""
import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .brisque import FEATURE_NAMES, image_features
from .image import Image
from .perturb import GAUSS_MODES, apply_condition, parse_condition
from .rng import check_seed
from .svr import FeatureRange, load_range_file, load_svr_model, scale_features, svr_predict


def check_images(X):
    """Validate an image batch and return it as a list of :class:`Image`."""
    if isinstance(X, Image):
        raise TypeError("expected a batch of images, got a single Image")
    if isinstance(X, np.ndarray):
        if X.ndim not in (3, 4):
            raise ValueError(f"image batch must be 3-D or 4-D, got shape {X.shape}")
        return [Image(x) for x in X]
    images = list(X)
    if not all(isinstance(x, Image) for x in images):
        return [Image(np.asarray(x)) for x in images]
    return images


def _stack(images, like):
    if isinstance(like, np.ndarray):
        out = np.stack([im.pixels for im in images])
        return out[..., 0] if like.ndim == 3 else out
    return images


class Corruptor(TransformerMixin, BaseEstimator):
    """Apply one named corruption condition to every image.

    ``image_ids`` passed to :meth:`transform` key the random streams; they
    default to the batch positions.
    """

    def __init__(self, condition="clean", seed=0, dataset="custom", gauss_mode="variance"):
        self.condition = condition
        self.seed = seed
        self.dataset = dataset
        self.gauss_mode = gauss_mode

    def fit(self, X=None, y=None):
        if self.gauss_mode not in GAUSS_MODES:
            raise ValueError(f"gauss_mode must be one of {GAUSS_MODES}")
        check_seed(self.seed)
        self.condition_ = parse_condition(self.condition)
        return self

    def transform(self, X, image_ids=None):
        check_is_fitted(self, "condition_")
        images = check_images(X)
        ids = range(len(images)) if image_ids is None else list(image_ids)
        if len(ids) != len(images):
            raise ValueError("image_ids must match the number of images")
        out = [
            apply_condition(im, self.condition_, self.seed, self.dataset, iid, self.gauss_mode)
            for im, iid in zip(images, ids)
        ]
        return _stack(out, X)


class BrisqueFeatures(TransformerMixin, BaseEstimator):
    """Images to the ``(n, 36)`` BRISQUE feature matrix."""

    def fit(self, X=None, y=None):
        self.n_features_out_ = len(FEATURE_NAMES)
        return self

    def transform(self, X):
        return np.array([image_features(im) for im in check_images(X)]).reshape(-1, len(FEATURE_NAMES))

    def get_feature_names_out(self, input_features=None):
        return np.array(FEATURE_NAMES, dtype=object)


class RangeScaler(TransformerMixin, BaseEstimator):
    """Per-feature linear map of [min, max] onto [lower, upper], as svm-scale does.

    ``fit`` learns the bounds from data; :meth:`from_range` adopts a parsed
    range file instead.
    """

    def __init__(self, lower=-1.0, upper=1.0):
        self.lower = lower
        self.upper = upper

    def fit(self, X, y=None):
        X = check_array(X)
        self.data_min_ = X.min(axis=0)
        self.data_max_ = X.max(axis=0)
        return self

    @classmethod
    def from_range(cls, ranges):
        scaler = cls(lower=ranges.lower, upper=ranges.upper)
        scaler.data_min_ = np.array(ranges.mins, dtype=np.float64)
        scaler.data_max_ = np.array(ranges.maxs, dtype=np.float64)
        return scaler

    def to_range(self):
        check_is_fitted(self, ["data_min_", "data_max_"])
        return FeatureRange(self.lower, self.upper, self.data_min_, self.data_max_)

    def transform(self, X):
        X = check_array(X)
        return scale_features(X, self.to_range())


class BrisqueRegressor(RegressorMixin, BaseEstimator):
    """No-reference quality score from a pre-trained RBF SVR model.

    ``fit`` only loads ``model_path`` / ``range_path``; nothing is trained.
    Scores are clamped to [0, 100]; higher means worse quality.
    """

    def __init__(self, model_path=None, range_path=None):
        self.model_path = model_path
        self.range_path = range_path

    def fit(self, X=None, y=None):
        if self.model_path is None or self.range_path is None:
            raise ValueError("BrisqueRegressor needs model_path and range_path")
        self.model_ = load_svr_model(self.model_path)
        self.ranges_ = load_range_file(self.range_path)
        return self

    def predict_features(self, F):
        check_is_fitted(self, ["model_", "ranges_"])
        F = check_array(F)
        scaled = scale_features(F, self.ranges_)
        raw = np.array([svr_predict(row, self.model_) for row in scaled])
        return np.clip(raw, 0.0, 100.0)

    def predict(self, X):
        return self.predict_features(BrisqueFeatures().fit().transform(X))

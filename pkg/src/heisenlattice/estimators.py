"""Power-law envelope regression with a scikit-learn estimator interface."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, check_X_y, check_array


class PowerLawEnvelope(RegressorMixin, BaseEstimator):
    """Fit ``|y| ~ C x^p`` to the upper envelope of oscillating data.

    The abscissa range is cut into geometric windows of ratio ``window_ratio``;
    in each window the largest ``|y|`` (and the ``x`` where it occurs) is
    kept, and a straight line is fitted to those maxima in log-log space.
    Windows without samples, or whose maximum is exactly zero, are skipped.

    Parameters
    ----------
    window_ratio : float
        Ratio between consecutive window edges (2.0 gives dyadic windows).
    x_min, x_max : float, optional
        Restrict the fit to this abscissa range.  Windows start at ``x_min``
        (or the smallest sample).
    min_windows : int
        Fewer non-empty windows than this raises ``ValueError``.

    Attributes
    ----------
    slope_, intercept_ : float
        Fitted line ``log|y| = intercept_ + slope_ * log x``.
    max_residual_ : float
        Largest absolute log residual among the window maxima.
    window_x_, window_y_ : ndarray
        The envelope points used by the fit.
    """

    def __init__(self, window_ratio=2.0, x_min=None, x_max=None, min_windows=2):
        self.window_ratio = window_ratio
        self.x_min = x_min
        self.x_max = x_max
        self.min_windows = min_windows

    def fit(self, X, y):
        X, y = check_X_y(np.reshape(X, (-1, 1)) if np.ndim(X) == 1 else X, y,
                         ensure_min_samples=2, y_numeric=True)
        x = X[:, 0]
        if np.any(x <= 0):
            raise ValueError("abscissae must be positive")
        if self.window_ratio <= 1:
            raise ValueError("window_ratio must exceed 1")
        lo = x.min() if self.x_min is None else self.x_min
        hi = x.max() if self.x_max is None else self.x_max
        keep = (x >= lo * (1 - 1e-12)) & (x <= hi * (1 + 1e-12))
        x, ay = x[keep], np.abs(y[keep])
        if not np.any(ay > 0):
            raise ValueError("all-zero envelope")
        idx = np.floor(np.log(x / lo) / np.log(self.window_ratio) + 1e-9).astype(int)
        # a sample sitting exactly on the upper edge belongs to the last window
        last = int(np.floor(np.log(hi / lo) / np.log(self.window_ratio) + 1e-9))
        if last > 0 and np.isclose(hi / lo, self.window_ratio ** last):
            idx = np.minimum(idx, last - 1)
        wx, wy = [], []
        for k in np.unique(idx):
            m = idx == k
            j = np.argmax(ay[m])
            if ay[m][j] > 0:
                wx.append(x[m][j])
                wy.append(ay[m][j])
        if len(wx) < max(self.min_windows, 2):
            raise ValueError(f"only {len(wx)} non-empty windows; need {max(self.min_windows, 2)}")
        lx, ly = np.log(wx), np.log(wy)
        M = np.vstack([np.ones_like(lx), lx]).T
        coef, *_ = np.linalg.lstsq(M, ly, rcond=None)
        self.intercept_, self.slope_ = float(coef[0]), float(coef[1])
        self.max_residual_ = float(np.max(np.abs(ly - M @ coef)))
        self.window_x_ = np.asarray(wx)
        self.window_y_ = np.asarray(wy)
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "slope_")
        x = check_array(np.reshape(X, (-1, 1)) if np.ndim(X) == 1 else X)[:, 0]
        return np.exp(self.intercept_) * x ** self.slope_

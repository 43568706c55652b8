"""First-order Takagi-Sugeno ANFIS with Gaussian membership functions.

Rule i fires with strength

    w_i = prod_j exp(-(x_j - c_ij)^2 / (2 s_ij^2))

and the output is the firing-normalised sum of linear consequents
``a_i . x + b_i``. The whole parameter set flattens to one vector in the
order: centres (row-major), sigmas (row-major), consequents (row-major,
weights then bias per rule).
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import TrainingDivergedError
from .features import FEATURE_NAMES
from .segmentation import kmeans

SIGMA_MIN = 1e-3
UNDERFLOW = 1e-300
FORMAT_VERSION = 1


@dataclass(frozen=True)
class AnfisModel:
    centers: np.ndarray      # (R, D)
    sigmas: np.ndarray       # (R, D)
    consequents: np.ndarray  # (R, D + 1)

    def __post_init__(self):
        c = np.array(self.centers, dtype=np.float64, ndmin=2)
        s = np.array(self.sigmas, dtype=np.float64, ndmin=2)
        q = np.array(self.consequents, dtype=np.float64, ndmin=2)
        r, d = c.shape
        if s.shape != (r, d) or q.shape != (r, d + 1):
            raise ValueError(
                f"inconsistent parameter blocks: centers {c.shape}, sigmas {s.shape}, consequents {q.shape}")
        if np.any(s < SIGMA_MIN):
            raise ValueError(f"membership sigmas must be >= {SIGMA_MIN}")
        for arr in (c, s, q):
            arr.setflags(write=False)
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "sigmas", s)
        object.__setattr__(self, "consequents", q)

    @property
    def n_rules(self):
        return self.centers.shape[0]

    @property
    def n_inputs(self):
        return self.centers.shape[1]

    @property
    def n_params(self):
        return param_count(self.n_inputs, self.n_rules)

    def flatten(self):
        return np.concatenate([self.centers.ravel(), self.sigmas.ravel(), self.consequents.ravel()])

    @classmethod
    def unflatten(cls, theta, n_inputs, n_rules):
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (param_count(n_inputs, n_rules),):
            raise ValueError(
                f"parameter vector has length {theta.size}, expected {param_count(n_inputs, n_rules)}")
        k = n_rules * n_inputs
        return cls(theta[:k].reshape(n_rules, n_inputs),
                   theta[k:2 * k].reshape(n_rules, n_inputs),
                   theta[2 * k:].reshape(n_rules, n_inputs + 1))

    def with_params(self, theta):
        return AnfisModel.unflatten(theta, self.n_inputs, self.n_rules)


def param_count(n_inputs, n_rules):
    return n_rules * 2 * n_inputs + n_rules * (n_inputs + 1)


def encode_targets(labels):
    """Class 1 -> 0.0, class 2 -> 1.0."""
    y = np.asarray(labels)
    if not np.all(np.isin(y, (1, 2))):
        raise ValueError("labels must be class codes 1 or 2")
    return (y == 2).astype(np.float64)


def new_model(n_inputs, n_rules, x_train, y_train=None, seed=0):
    """Initialise a model from standardized training data.

    Rule centres come from k-means with ``k = n_rules``; every rule gets the
    per-feature training std as its sigmas. Consequent weights start at zero
    and each rule's bias is the mean {0,1} target of its cluster members.
    """
    x = np.asarray(x_train, dtype=np.float64).reshape(-1, n_inputs)
    if n_rules < 1:
        raise ValueError("n_rules must be >= 1")
    if x.shape[0] == 0:
        raise ValueError("training set is empty")
    if n_rules > x.shape[0]:
        raise ValueError(f"n_rules={n_rules} exceeds the training set size {x.shape[0]}")
    km = kmeans(x, n_rules, seed=seed)
    std = np.maximum(x.std(axis=0), SIGMA_MIN)
    sigmas = np.tile(std, (n_rules, 1))
    consequents = np.zeros((n_rules, n_inputs + 1))
    if y_train is not None:
        t = encode_targets(y_train)
        for i in range(n_rules):
            members = km.assignments == i
            consequents[i, -1] = t[members].mean() if members.any() else t.mean()
    return AnfisModel(km.centroids, sigmas, consequents)


def _firing(model, x):
    """Normalised firing strengths, shape (N, R), and the underflow mask."""
    inv2 = 1.0 / model.sigmas ** 2
    # sum_d ((x_d - c_d) / s_d)^2 expanded into matrix products
    sq = (x * x) @ inv2.T - 2.0 * x @ (model.centers * inv2).T + (model.centers ** 2 * inv2).sum(axis=1)
    w = np.exp(-0.5 * np.maximum(sq, 0.0))
    total = w.sum(axis=1, keepdims=True)
    dead = total[:, 0] < UNDERFLOW
    if dead.any():
        wbar = np.full_like(w, 1.0 / model.n_rules)
        ok = ~dead
        wbar[ok] = w[ok] / total[ok]
    else:
        wbar = w / total
    return wbar, dead


def _rule_outputs(model, x):
    return x @ model.consequents[:, :-1].T + model.consequents[:, -1]


def forward(model, x):
    """Model output for one sample (1-D input) or a batch (2-D input)."""
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    batch = arr.reshape(1, -1) if single else arr
    if batch.shape[1] != model.n_inputs:
        raise ValueError(f"model expects {model.n_inputs} inputs, got {batch.shape[1]}")
    wbar, _ = _firing(model, batch)
    out = (wbar * _rule_outputs(model, batch)).sum(axis=1)
    return float(out[0]) if single else out


def predict(model, x):
    """Class code per sample: 2 iff the score is >= 0.5."""
    score = forward(model, x)
    if np.ndim(score) == 0:
        return 2 if score >= 0.5 else 1
    return np.where(np.asarray(score) >= 0.5, 2, 1)


def loss(model, x, t):
    """Mean squared error between outputs and real targets ``t``.

    Class labels go through ``encode_targets`` first.
    """
    x = np.asarray(x, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64).ravel()
    if t.size == 0:
        raise ValueError("cannot evaluate the loss on an empty dataset")
    err = forward(model, x.reshape(len(t), -1)) - t
    return float(np.mean(err * err))


def gradient(model, x, t):
    """Analytic gradient of ``loss`` in flatten order."""
    x = np.asarray(x, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64).ravel()
    n = len(t)
    x = x.reshape(n, -1)
    wbar, dead = _firing(model, x)
    diff = x[:, None, :] - model.centers[None, :, :]
    f = _rule_outputs(model, x)
    yhat = (wbar * f).sum(axis=1)
    dy = 2.0 * (yhat - t) / n                      # dL/dyhat, (N,)

    # consequents: dyhat/da_ij = wbar_i x_j, dyhat/db_i = wbar_i
    g_w = (dy[:, None] * wbar).T @ x               # (R, D)
    g_b = (dy[:, None] * wbar).sum(axis=0)         # (R,)
    g_cons = np.concatenate([g_w, g_b[:, None]], axis=1)

    # premises through log w_i; zero where the uniform fallback is active
    g_logw = dy[:, None] * wbar * (f - yhat[:, None])
    g_logw[dead] = 0.0
    s2 = model.sigmas ** 2
    g_cent = np.einsum("nr,nrd->rd", g_logw, diff) / s2
    g_sig = np.einsum("nr,nrd->rd", g_logw, diff ** 2) / (s2 * model.sigmas)
    return np.concatenate([g_cent.ravel(), g_sig.ravel(), g_cons.ravel()])


def clamp_sigmas(theta, n_inputs, n_rules):
    theta = np.array(theta, dtype=np.float64)
    k = n_rules * n_inputs
    theta[k:2 * k] = np.maximum(theta[k:2 * k], SIGMA_MIN)
    return theta


@dataclass
class TrainResult:
    model: AnfisModel
    history: list = field(default_factory=list)


def train_gradient(model, x, t, lr=0.05, iters=200):
    """Plain gradient descent with sigma clamping.

    ``history`` holds the loss before the first step and after every step.
    """
    if lr <= 0:
        raise ValueError("learning rate must be positive")
    theta = model.flatten()
    history = [loss(model, x, t)]
    for _ in range(iters):
        theta = clamp_sigmas(theta - lr * gradient(model, x, t), model.n_inputs, model.n_rules)
        model = model.with_params(theta)
        cur = loss(model, x, t)
        if not math.isfinite(cur) or cur > 1e12:
            raise TrainingDivergedError(
                f"gradient descent diverged (loss={cur:.3g}); try a smaller learning rate than {lr}")
        history.append(cur)
    return TrainResult(model, history)


# ------------------------------------------------------------ serialization

def model_to_dict(model, standardizer=None, feature_order=FEATURE_NAMES, extra=None):
    doc = {
        "format_version": FORMAT_VERSION,
        "n_inputs": model.n_inputs,
        "n_rules": model.n_rules,
        "centers": model.centers.tolist(),
        "sigmas": model.sigmas.tolist(),
        "consequents": model.consequents.tolist(),
        "feature_means": None if standardizer is None else standardizer.means.tolist(),
        "feature_stds": None if standardizer is None else standardizer.stds.tolist(),
        "feature_order": list(feature_order),
    }
    if extra:
        doc["training"] = extra
    return doc


def save_model(path, model, standardizer=None, feature_order=FEATURE_NAMES, extra=None):
    doc = model_to_dict(model, standardizer, feature_order, extra)
    # json emits repr(float), the shortest string that round-trips exactly
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")
    return Path(path)


MODEL_KEYS = ("format_version", "n_inputs", "n_rules", "centers", "sigmas", "consequents",
              "feature_means", "feature_stds", "feature_order")


def validate_model_doc(doc):
    missing = [k for k in MODEL_KEYS if k not in doc]
    if missing:
        raise ValueError(f"model document is missing keys: {', '.join(missing)}")
    if doc["format_version"] != FORMAT_VERSION:
        raise ValueError(f"unsupported model format_version {doc['format_version']!r}")
    r, d = doc["n_rules"], doc["n_inputs"]
    if np.shape(doc["centers"]) != (r, d) or np.shape(doc["sigmas"]) != (r, d):
        raise ValueError("centers/sigmas shape does not match n_rules x n_inputs")
    if np.shape(doc["consequents"]) != (r, d + 1):
        raise ValueError("consequents shape does not match n_rules x (n_inputs + 1)")
    if len(doc["feature_order"]) != d:
        raise ValueError("feature_order length does not match n_inputs")
    for key in ("feature_means", "feature_stds"):
        if doc[key] is not None and len(doc[key]) != d:
            raise ValueError(f"{key} length does not match n_inputs")
    return doc


def load_model(path):
    """Returns ``(model, standardizer_or_None, document)``."""
    from .features import Standardizer

    doc = validate_model_doc(json.loads(Path(path).read_text()))
    model = AnfisModel(doc["centers"], doc["sigmas"], doc["consequents"])
    st = None
    if doc["feature_means"] is not None:
        st = Standardizer(np.array(doc["feature_means"]), np.array(doc["feature_stds"]))
    return model, st, doc

"""Small square instances where the stability theorems are checkable exactly."""
import numpy as np

from recsparse.harness import track
from recsparse.sensing import gen_bounded_uniform_noise, measure, stream
from recsparse.signal_model import generate_sequence


def near_orthonormal(n, seed, jitter=0.02):
    rng = stream(seed, 99)
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    A = Q * np.sign(np.diag(R)) + jitter * rng.standard_normal((n, n)) / np.sqrt(n)
    return A / np.linalg.norm(A, axis=0)


def run_small(A, model_params, n_frames, seed, c, algorithm="modcs", alpha="auto", alphas="auto"):
    """Generate one sequence, measure it with `A` and track it; returns ``(X, outputs)``."""
    key = tuple(seed) if isinstance(seed, tuple) else (seed,)
    X = np.vstack([s.x for s in generate_sequence(model_params, n_frames, (*key, 0))])
    frames = []
    for t in range(n_frames):
        w = gen_bounded_uniform_noise(A.shape[0], c, (*key, 1, t))
        frames.append((A, None, measure(A, X[t], w, t, c)))
    outs = track(algorithm, frames, X, alpha=alpha, alphas=alphas, check=True)
    return X, outs

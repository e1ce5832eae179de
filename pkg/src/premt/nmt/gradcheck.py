"""Central finite-difference verification of the analytic gradients."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import backward, forward, make_batch
from .params import Seq2SeqParams


@dataclass
class GradCheckReport:
    epsilon: float
    tolerance: float
    max_rel_error: dict = field(default_factory=dict)    # tensor -> worst relative error
    samples: dict = field(default_factory=dict)          # tensor -> coordinates checked
    failures: list = field(default_factory=list)         # (tensor, index, analytic, numeric, rel)

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def worst(self) -> float:
        return max(self.max_rel_error.values(), default=0.0)

    def summary(self) -> str:
        lines = [f"{'tensor':<10} {'checked':>7} {'max_rel_err':>12}"]
        for name, err in self.max_rel_error.items():
            lines.append(f"{name:<10} {self.samples[name]:>7} {err:>12.3e}")
        status = "PASS" if self.passed else f"FAIL ({len(self.failures)} coordinates)"
        lines.append(f"overall max relative error {self.worst:.3e} "
                     f"(tolerance {self.tolerance:g}): {status}")
        for name, idx, ga, gn, rel in self.failures[:20]:
            lines.append(f"  {name}{list(idx)}: analytic={ga:.6e} numeric={gn:.6e} rel={rel:.3e}")
        return "\n".join(lines)


def relative_error(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-8)


def gradient_check(params: Seq2SeqParams, pair, epsilon: float = 1e-5, tolerance: float = 1e-4,
                   samples_per_tensor: int = 200, seed: int = 0, *, pad=(3, 3), bos=1, eos=2) -> GradCheckReport:
    """Compare backprop against central differences on sampled coordinates.

    Every tensor contributes ``samples_per_tensor`` distinct coordinates (or
    all of them, when smaller).  ``pair`` is ``(src_ids, tgt_ids)`` or a list
    of such pairs.  Parameters are restored exactly afterwards.
    """
    pairs = [pair] if isinstance(pair, tuple) else list(pair)
    batch = make_batch(pairs, pad[0], pad[1], bos, eos)
    assert all(v.dtype == np.float64 for _, v in params.items()), "double precision required"
    _, cache = forward(params, *batch)
    grads = backward(params, cache)
    rng = np.random.default_rng(seed)
    report = GradCheckReport(epsilon, tolerance)
    for name, arr in params.items():
        flat = arr.reshape(-1)
        n = min(samples_per_tensor, flat.size)
        coords = rng.choice(flat.size, size=n, replace=False)
        worst = 0.0
        for c in coords:
            old = flat[c]
            flat[c] = old + epsilon
            up, _ = forward(params, *batch, keep_cache=False)
            flat[c] = old - epsilon
            down, _ = forward(params, *batch, keep_cache=False)
            flat[c] = old
            numeric = (up - down) / (2.0 * epsilon)
            analytic = float(grads[name].reshape(-1)[c])
            rel = relative_error(analytic, numeric)
            worst = max(worst, rel)
            if not rel <= tolerance and not math.isinf(tolerance):
                report.failures.append((name, np.unravel_index(c, arr.shape), analytic, numeric, rel))
        report.max_rel_error[name] = worst
        report.samples[name] = n
    return report


def random_check_params(dims, seed: int = 0, scale: float = 0.5) -> Seq2SeqParams:
    """Parameters drawn at a generic point (i.i.d. normal, std ``scale``).

    The small initialization used for training puts many gradients below
    the finite-difference noise floor; checking here keeps every relative
    error meaningful.
    """
    from .params import tensor_shapes
    rng = np.random.default_rng(seed)
    return Seq2SeqParams(dims, {k: rng.normal(0.0, scale, s) for k, s in tensor_shapes(dims).items()})

"""Configuration-space weight integrals by gauge-fixed Monte Carlo.

The integral of a wedge of propagator pullbacks over a quotient configuration
space is computed on an explicit slice of the group action:

* aerial-only graphs, d = 2: z_1 = 0, z_2 on the unit circle; free
  coordinates (theta, x_3, y_3, ..., x_n, y_n).
* aerial-only graphs, d >= 3 (volume-form propagator): x_1 = 0, x_2 on the
  unit sphere (stereographic chart); free coordinates (chart of x_2, x_3..x_n).
* mixed graphs, d = 2: z_1 = i when there is an aerial vertex, else the first
  two boundary points pinned to 0 and 1; boundary points are ordered by label.

The integrand is the determinant of the matrix of pulled-back form components
against the slice coordinates (for d >= 3 a block expansion over coordinate
assignments), times importance weights for the Cauchy-tailed sampling laws.
Weights are zero by degree count when (d-1)#E does not match the slice
dimension.  Sampling is split into fixed batches, each driven by a substream
seeded from (seed, batch index), so results are reproducible bit-for-bit for
a given (seed, n_samples, n_batches).
"""

from __future__ import annotations

import itertools
import json
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from hashlib import sha256

import numpy as np

from .graphs import AERIAL, FeynmanGraph, GraphError, graph_to_json, normalize

TWO_PI = 2.0 * math.pi

PROPAGATORS = ("sphere_vol", "angle", "kontsevich", "anti_kontsevich")
_HALF_ONLY = ("kontsevich", "anti_kontsevich")


class WeightError(ValueError):
    pass


@dataclass(frozen=True)
class WeightEstimate:
    mean: float
    stderr: float
    n_samples: int
    seed: int
    zero_by_degree: bool = False
    exact: bool = False
    rejection_rate: float = 0.0

    def compatible_with(self, value: float, n_sigma: float = 3.0) -> bool:
        if self.exact or self.stderr == 0.0:
            return self.mean == value
        return abs(self.mean - value) <= n_sigma * self.stderr


def resolve_space(g: FeynmanGraph, space: str = "auto") -> str:
    """'rd' is the aerial configuration space of R^d, 'half' the upper
    half-space one; mixed graphs always live in 'half'."""
    if space == "auto":
        return "half" if g.m_ground else "rd"
    if space not in ("rd", "half"):
        raise WeightError(f"unknown space {space!r}")
    if space == "rd" and g.m_ground:
        raise WeightError("mixed graphs live over the half-space")
    return space


def slice_dimension(g: FeynmanGraph, space: str = "auto") -> int:
    n, m, d = g.n_aerial, g.m_ground, g.d
    if resolve_space(g, space) == "rd":
        return d * n - d - 1
    if d != 2:
        raise WeightError("half-space slices are implemented for d = 2 only")
    return 2 * n + m - 2


def zero_by_degree(g: FeynmanGraph, space: str = "auto") -> bool:
    return (g.d - 1) * len(g.edges) != slice_dimension(g, space)


def _validate(g: FeynmanGraph, prop: str, space: str) -> None:
    if prop not in PROPAGATORS:
        raise WeightError(f"unknown propagator {prop!r}")
    if prop in _HALF_ONLY and g.d != 2:
        raise WeightError(f"{prop} is a d=2 propagator")
    if prop == "angle" and g.d != 2:
        raise WeightError("the angle propagator lives in d = 2")
    if g.m_ground and prop == "sphere_vol" and g.d != 2:
        raise WeightError("mixed graphs need a d=2 propagator")
    if space == "rd" and prop in _HALF_ONLY:
        raise WeightError(f"{prop} integrates over the half-space theory")


# --- d = 2 form components ----------------------------------------------------

def _arg_components(xs, ys, xt, yt):
    """d Arg(z_s - z_t) / 2pi as coefficients of (dx_s, dy_s, dx_t, dy_t)."""
    u = xs - xt
    v = ys - yt
    r2 = u * u + v * v
    c = 1.0 / (TWO_PI * r2)
    return -v * c, u * c, v * c, -u * c


def _kontsevich_components(xs, ys, xt, yt):
    """d[Arg(z_s - z_t) - Arg(conj(z_s) - z_t)] / 2pi."""
    a1, b1, c1, d1 = _arg_components(xs, ys, xt, yt)
    u = xs - xt
    v = -ys - yt
    r2 = u * u + v * v
    k = 1.0 / (TWO_PI * r2)
    # mirrored point: d/dx_s = -v k ; d/dy_s = +u k * d(-y_s)/dy_s = -u k
    a2, b2, c2, d2 = -v * k, -u * k, v * k, -u * k
    return a1 - a2, b1 - b2, c1 - c2, d1 - d2


def form_value(prop: str, points: dict[int, tuple[float, float]],
               edge: tuple[int, int], coords: list[tuple[str, int]]) -> list[float]:
    """Components of the pulled-back propagator 1-form along the slice
    coordinates at a single configuration point (d = 2 propagators)."""
    s, t = edge
    xs, ys = points[s]
    xt, yt = points[t]
    if xs == xt and ys == yt:
        raise WeightError("coincident points")
    if prop in ("angle", "sphere_vol"):
        a, b, c, dd = _arg_components(np.float64(xs), np.float64(ys),
                                      np.float64(xt), np.float64(yt))
    elif prop == "kontsevich":
        a, b, c, dd = _kontsevich_components(np.float64(xs), np.float64(ys),
                                             np.float64(xt), np.float64(yt))
    elif prop == "anti_kontsevich":
        c, dd, a, b = _kontsevich_components(np.float64(xt), np.float64(yt),
                                             np.float64(xs), np.float64(ys))
    else:
        raise WeightError(f"unknown propagator {prop!r}")
    out = []
    for kind, idx in coords:
        if kind == "zx":
            out.append(a if idx == s else (c if idx == t else 0.0))
        elif kind == "zy":
            out.append(b if idx == s else (dd if idx == t else 0.0))
        elif kind == "g":
            out.append(a if idx == s else (c if idx == t else 0.0))
        else:
            raise WeightError(f"unknown coordinate kind {kind!r}")
    return [float(v) for v in out]


# --- slices ---------------------------------------------------------------------

def _slice_coords(g: FeynmanGraph) -> list[tuple[str, int]]:
    n, m = g.n_aerial, g.m_ground
    coords: list[tuple[str, int]] = []
    if m == 0:
        coords.append(("theta", 2))
        for j in range(3, n + 1):
            coords.append(("zx", j))
            coords.append(("zy", j))
    elif n >= 1:
        for j in range(2, n + 1):
            coords.append(("zx", j))
            coords.append(("zy", j))
        for k in range(n + 1, n + m + 1):
            coords.append(("g", k))
    else:
        for k in range(3, m + 1):
            coords.append(("g", k))
    return coords


def _sample_plane(g: FeynmanGraph, rng, size: int, scale: float = 1.0):
    """Aerial-only d=2 slice: z_1 = 0, z_2 = exp(i theta), z_3.. Cauchy."""
    n = g.n_aerial
    theta = rng.uniform(0.0, TWO_PI, size)
    xs = {1: np.zeros(size), 2: np.cos(theta)}
    ys = {1: np.zeros(size), 2: np.sin(theta)}
    logw = np.full(size, math.log(TWO_PI))
    for j in range(3, n + 1):
        ux, uy = rng.uniform(size=size), rng.uniform(size=size)
        xs[j] = scale * np.tan(math.pi * (ux - 0.5))
        ys[j] = scale * np.tan(math.pi * (uy - 0.5))
        logw += np.log(math.pi * scale * (1 + (xs[j] / scale) ** 2))
        logw += np.log(math.pi * scale * (1 + (ys[j] / scale) ** 2))
    return xs, ys, theta, np.exp(logw)


def _sample_half(g: FeynmanGraph, rng, size: int, scale: float = 1.0):
    """Mixed d=2 slice: z_1 = i (or two pinned boundary points), ordered
    boundary points, Cauchy tails."""
    n, m = g.n_aerial, g.m_ground
    xs, ys = {}, {}
    logw = np.zeros(size)
    if n >= 1:
        xs[1] = np.zeros(size)
        ys[1] = np.ones(size)
        for j in range(2, n + 1):
            ux, uy = rng.uniform(size=size), rng.uniform(size=size)
            xs[j] = scale * np.tan(math.pi * (ux - 0.5))
            ys[j] = scale * np.tan(math.pi * uy / 2.0)
            logw += np.log(math.pi * scale * (1 + (xs[j] / scale) ** 2))
            logw += np.log(0.5 * math.pi * scale * (1 + (ys[j] / scale) ** 2))
        if m:
            u = rng.uniform(size=(size, m))
            q = scale * np.tan(math.pi * (u - 0.5))
            q.sort(axis=1)
            for k in range(m):
                xs[n + 1 + k] = q[:, k]
                ys[n + 1 + k] = np.zeros(size)
                logw += np.log(math.pi * scale * (1 + (q[:, k] / scale) ** 2))
            logw -= math.lgamma(m + 1)
    else:
        xs[1], ys[1] = np.zeros(size), np.zeros(size)
        xs[2], ys[2] = np.ones(size), np.zeros(size)
        extra = m - 2
        if extra > 0:
            u = rng.uniform(size=(size, extra))
            q = 1.0 + scale * np.tan(math.pi * u / 2.0)
            q.sort(axis=1)
            for k in range(extra):
                xs[3 + k] = q[:, k]
                ys[3 + k] = np.zeros(size)
                logw += np.log(0.5 * math.pi * scale *
                               (1 + ((q[:, k] - 1.0) / scale) ** 2))
            logw -= math.lgamma(extra + 1)
    return xs, ys, None, np.exp(logw)


def _batch_integrand_d2(g: FeynmanGraph, prop: str, xs, ys, theta):
    """Determinant of form components against the slice coordinates."""
    coords = _slice_coords(g)
    E = len(g.edges)
    size = next(iter(xs.values())).shape[0]
    M = np.zeros((size, E, len(coords)))
    for row, (s, t) in enumerate(g.edges):
        if prop in ("angle", "sphere_vol"):
            a, b, c, dd = _arg_components(xs[s], ys[s], xs[t], ys[t])
        elif prop == "kontsevich":
            a, b, c, dd = _kontsevich_components(xs[s], ys[s], xs[t], ys[t])
        elif prop == "anti_kontsevich":
            c, dd, a, b = _kontsevich_components(xs[t], ys[t], xs[s], ys[s])
        else:
            raise WeightError(f"unknown propagator {prop!r}")
        for col, (kind, idx) in enumerate(coords):
            if kind == "theta":
                # z_2 = exp(i theta): dx_2 = -sin theta dtheta, dy_2 = cos theta
                if idx == s:
                    M[:, row, col] = -np.sin(theta) * a + np.cos(theta) * b
                elif idx == t:
                    M[:, row, col] = -np.sin(theta) * c + np.cos(theta) * dd
            elif kind == "zx" or kind == "g":
                if idx == s:
                    M[:, row, col] = a
                elif idx == t:
                    M[:, row, col] = c
            elif kind == "zy":
                if idx == s:
                    M[:, row, col] = b
                elif idx == t:
                    M[:, row, col] = dd
    return np.linalg.det(M)


def _min_pair_distance(g: FeynmanGraph, xs, ys):
    ids = [v.id for v in g.vertices]
    size = next(iter(xs.values())).shape[0]
    dmin = np.full(size, np.inf)
    for a, b in itertools.combinations(ids, 2):
        d2 = (xs[a] - xs[b]) ** 2 + (ys[a] - ys[b]) ** 2
        dmin = np.minimum(dmin, d2)
    return np.sqrt(dmin)


# --- d >= 3 volume-form integrand ----------------------------------------------

def _sample_rd(g: FeynmanGraph, rng, size: int, scale: float = 1.0):
    """x_1 = 0, x_2 = unit vector (stereographic chart), x_3.. Cauchy per
    coordinate."""
    n, d = g.n_aerial, g.d
    pts = {1: np.zeros((size, d))}
    # stereographic coordinates u in R^{d-1} -> sphere
    u = scale * np.tan(math.pi * (rng.uniform(size=(size, d - 1)) - 0.5))
    logw = np.log(math.pi * scale * (1 + (u / scale) ** 2)).sum(axis=1)
    s2 = (u * u).sum(axis=1)
    denom = 1.0 + s2
    x2 = np.empty((size, d))
    x2[:, :d - 1] = 2 * u / denom[:, None]
    x2[:, d - 1] = (s2 - 1.0) / denom
    pts[2] = x2
    for j in range(3, n + 1):
        xj = scale * np.tan(math.pi * (rng.uniform(size=(size, d)) - 0.5))
        logw += np.log(math.pi * scale * (1 + (xj / scale) ** 2)).sum(axis=1)
        pts[j] = xj
    return pts, u, np.exp(logw)


def _sphere_chart_frame(u):
    """Tangent vectors d x_2 / d u_k of the stereographic chart."""
    size, dm1 = u.shape
    d = dm1 + 1
    s2 = (u * u).sum(axis=1)
    denom = (1.0 + s2)
    frame = np.zeros((size, dm1, d))
    for k in range(dm1):
        frame[:, k, :dm1] = -4 * u[:, k][:, None] * u / denom[:, None] ** 2
        frame[:, k, k] += 2.0 / denom
        frame[:, k, d - 1] = 4 * u[:, k] / denom ** 2
    return frame


def _batch_integrand_rd(g: FeynmanGraph, pts, u):
    """Wedge of normalized sphere-volume pullbacks, evaluated by expanding
    over ordered assignments of slice coordinates to edges (each edge takes
    d-1 coordinates; the sign is the shuffle parity of the assignment)."""
    n, d = g.n_aerial, g.d
    E = len(g.edges)
    size = u.shape[0]
    area = 2 * math.pi ** (d / 2) / math.gamma(d / 2)
    frame = _sphere_chart_frame(u)
    vecs: list[tuple[int, np.ndarray]] = [(2, frame[:, k, :]) for k in range(d - 1)]
    for j in range(3, n + 1):
        for c in range(d):
            e = np.zeros((size, d))
            e[:, c] = 1.0
            vecs.append((j, e))
    if len(vecs) != (d - 1) * E:
        raise WeightError("degree mismatch in the volume integrand")
    edge_geom = []
    for s, t in g.edges:
        diff = pts[s] - pts[t]
        norm = np.linalg.norm(diff, axis=1)
        edge_geom.append((s, t, norm, diff / norm[:, None]))
    total = np.zeros(size)

    def omega(row: int, combo: tuple[int, ...]) -> np.ndarray:
        s, t, norm, unit = edge_geom[row]
        mat = np.zeros((size, d, d))
        mat[:, 0, :] = unit  # the radial row kills radial components below
        for r, ci in enumerate(combo, start=1):
            vtx, vec = vecs[ci]
            if vtx == s:
                mat[:, r, :] = vec / norm[:, None]
            elif vtx == t:
                mat[:, r, :] = -vec / norm[:, None]
        return np.linalg.det(mat) / area

    def expand(row: int, remaining: tuple[int, ...], acc: np.ndarray) -> None:
        nonlocal total
        if row == E:
            total = total + acc
            return
        for combo in itertools.combinations(remaining, d - 1):
            rem = tuple(i for i in remaining if i not in combo)
            perm = list(combo) + list(rem)
            inv = sum(1 for i in range(len(perm)) for j in range(i)
                      if perm[j] > perm[i])
            sgn = -1.0 if inv & 1 else 1.0
            expand(row + 1, rem, acc * (sgn * omega(row, combo)))

    expand(0, tuple(range(len(vecs))), np.ones(size))
    return total


# --- estimator -------------------------------------------------------------------

def _mc(g: FeynmanGraph, prop: str, n_samples: int, seed: int,
        n_batches: int = 64, min_dist: float = 1e-12,
        space: str = "auto") -> WeightEstimate:
    space = resolve_space(g, space)
    per = max(1, int(n_samples) // n_batches)
    means = []
    rejected = 0
    total = 0
    for b in range(n_batches):
        rng = np.random.default_rng([seed, b])
        if space == "rd" and g.d == 2:
            xs, ys, theta, w = _sample_plane(g, rng, per)
            vals = _batch_integrand_d2(g, prop, xs, ys, theta) * w
            dmin = _min_pair_distance(g, xs, ys)
        elif space == "rd":
            pts, u, w = _sample_rd(g, rng, per)
            vals = _batch_integrand_rd(g, pts, u) * w
            dmin = np.full(per, np.inf)
            ids = [v.id for v in g.vertices]
            for a, c in itertools.combinations(ids, 2):
                dmin = np.minimum(dmin, np.linalg.norm(pts[a] - pts[c], axis=1))
        else:
            xs, ys, theta, w = _sample_half(g, rng, per)
            vals = _batch_integrand_d2(g, prop, xs, ys, theta) * w
            dmin = _min_pair_distance(g, xs, ys)
        bad = dmin < min_dist
        rejected += int(bad.sum())
        total += per
        vals = np.where(bad, 0.0, vals)
        means.append(float(vals.mean()))
    means = np.asarray(means)
    mean = float(means.mean())
    stderr = float(means.std(ddof=1) / math.sqrt(n_batches))
    return WeightEstimate(mean, stderr, per * n_batches, seed,
                          rejection_rate=rejected / max(total, 1))


def weight(g: FeynmanGraph, prop: str, n_samples: int = 200_000, seed: int = 0,
           n_batches: int = 64, cache: "WeightCache | None" = None,
           space: str = "auto") -> WeightEstimate:
    """Monte-Carlo weight of a graph; exact in the degenerate cases (zero by
    degree count, empty slices, the normalized two-vertex graphs)."""
    space = resolve_space(g, space)
    _validate(g, prop, space)
    canon, sign = normalize(g)
    if sign == 0:
        return WeightEstimate(0.0, 0.0, 0, seed, exact=True)
    dim = slice_dimension(canon, space)
    if zero_by_degree(canon, space):
        return WeightEstimate(0.0, 0.0, 0, seed, zero_by_degree=True, exact=True)
    if dim == 0:
        return WeightEstimate(float(sign), 0.0, 0, seed, exact=True)
    if space == "rd" and canon.n_aerial == 2 and len(canon.edges) == 1 \
            and prop in ("angle", "sphere_vol"):
        # the normalization pins the 1->2 direction to 1; the reversed edge
        # pulls back along the antipodal map, of degree (-1)**d, which is
        # invisible for even d and makes the two-ary operator the bracket
        value = 1.0 if canon.edges[0] == (1, 2) else float((-1) ** canon.d)
        return WeightEstimate(value * sign, 0.0, 0, seed, exact=True)
    if cache is not None:
        hit = cache.get(canon, prop, n_samples, seed, space)
        if hit is not None:
            return WeightEstimate(hit["mean"] * sign, hit["stderr"],
                                  hit["n_samples"], seed,
                                  rejection_rate=hit.get("rejection_rate", 0.0))
    est = _mc(canon, prop, n_samples, seed, n_batches, space=space)
    if cache is not None:
        cache.put(canon, prop, n_samples, seed, est, space)
    if sign != 1:
        est = WeightEstimate(est.mean * sign, est.stderr, est.n_samples, seed,
                             rejection_rate=est.rejection_rate)
    return est


# --- Stokes check ------------------------------------------------------------------

def _reorder_sign(g: FeynmanGraph, A: frozenset[int]) -> int:
    """Sign comparing (quotient edges, subgraph edges) with g's edge order."""
    inside = [i for i, (s, t) in enumerate(g.edges) if s in A and t in A]
    outside = [i for i, e in enumerate(g.edges) if i not in inside]
    perm = outside + inside
    inv = sum(1 for i in range(len(perm)) for j in range(i) if perm[j] > perm[i])
    return -1 if (inv & 1 and (g.d - 1) % 2) else 1


def _graph_seed(g: FeynmanGraph, base: int) -> int:
    """Seed derived from the canonical graph, so equal graphs share their
    estimate and symmetric cancellations in sums are exact."""
    canon, _ = normalize(g)
    blob = json.dumps([graph_to_json(canon), base], sort_keys=True)
    return int.from_bytes(sha256(blob.encode()).digest()[:6], "big")


def stokes_residual(g: FeynmanGraph, prop: str, n_samples: int = 200_000,
                    seed: int = 0, cache: "WeightCache | None" = None
                    ) -> tuple[float, float, list]:
    """Sum over admissible subsets of +-weight(sub) * weight(quotient); the
    boundary of a one-short-of-top form, compatible with zero.  Per-graph
    seeds come from the canonical graph, so terms that cancel by relabelling
    cancel exactly."""
    from .graphs import admissible_subsets, quotient, subgraph
    terms = []
    mean = 0.0
    var = 0.0
    for A in sorted(admissible_subsets(g, g.d), key=sorted):
        sub = subgraph(g, A)
        quo = quotient(g, A)
        sgn = _reorder_sign(g, A)
        w_sub = weight(sub, prop, n_samples, _graph_seed(sub, seed), cache=cache)
        w_quo = weight(quo, prop, n_samples, _graph_seed(quo, seed), cache=cache)
        term = sgn * w_sub.mean * w_quo.mean
        t_var = (w_sub.mean * w_quo.stderr) ** 2 + (w_quo.mean * w_sub.stderr) ** 2 \
            + (w_sub.stderr * w_quo.stderr) ** 2
        mean += term
        var += t_var
        terms.append({"subset": sorted(A), "sign": sgn, "sub": w_sub, "quo": w_quo})
    return mean, math.sqrt(var), terms


# --- rational snapping ---------------------------------------------------------------

def snap_rational(mean: float, stderr: float, max_denominator: int = 16
                  ) -> Fraction | None:
    """Nearest small-denominator rational within 3 sigma, provided the next
    candidate is more than 6 sigma away; None when ambiguous or far.  The
    sigma is floored at float precision so that zero-variance estimates snap."""
    if stderr < 0 or not math.isfinite(mean):
        return None
    sigma = max(stderr, 1e-12 * max(1.0, abs(mean)))
    cands = set()
    for q in range(1, max_denominator + 1):
        p = round(mean * q)
        for dp in (-1, 0, 1):
            cands.add(Fraction(p + dp, q))
    ranked = sorted(cands, key=lambda r: (abs(mean - float(r)), r.denominator))
    best = ranked[0]
    if abs(mean - float(best)) >= 3 * sigma:
        return None
    nxt = next((r for r in ranked[1:] if r != best), None)
    if nxt is not None and abs(mean - float(nxt)) <= 6 * sigma:
        return None
    return best


# --- append-only cache ------------------------------------------------------------------

class WeightCache:
    """Append-only JSONL store keyed by canonical graph, propagator, budget."""

    def __init__(self, path: str | None = None):
        if path is None:
            path = os.environ.get("OPK_CACHE", ".opk-cache")
        self.path = os.path.join(path, "weights.jsonl")
        self._mem: dict[str, dict] = {}
        if os.path.exists(self.path):
            with open(self.path) as fh:
                for line in fh:
                    try:
                        row = json.loads(line)
                    except json.JSONDecodeError:
                        continue
                    self._mem[row["key"]] = row

    @staticmethod
    def _key(g: FeynmanGraph, prop: str, n_samples: int, seed: int,
             space: str = "auto") -> str:
        blob = json.dumps([graph_to_json(g), prop, n_samples, seed, space],
                          sort_keys=True)
        return sha256(blob.encode()).hexdigest()[:24]

    def get(self, g: FeynmanGraph, prop: str, n_samples: int, seed: int,
            space: str = "auto"):
        return self._mem.get(self._key(g, prop, n_samples, seed, space))

    def put(self, g: FeynmanGraph, prop: str, n_samples: int, seed: int,
            est: WeightEstimate, space: str = "auto") -> None:
        key = self._key(g, prop, n_samples, seed, space)
        row = {"key": key, "graph": graph_to_json(g), "prop": prop,
               "mean": est.mean, "stderr": est.stderr,
               "n_samples": est.n_samples, "seed": seed,
               "rejection_rate": est.rejection_rate}
        self._mem[key] = row
        os.makedirs(os.path.dirname(self.path), exist_ok=True)
        with open(self.path, "a") as fh:
            fh.write(json.dumps(row) + "\n")

"""t-SNE embedding of code vectors into 2D.

Exact gradients for small N; a quadtree Barnes-Hut approximation of the
repulsive term for larger N, with affinities restricted to nearest
neighbors found via a vantage-point tree. The optimization schedule is the
standard fixed one: early exaggeration for the first 250 iterations and a
momentum switch at iteration 250.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

PERPLEXITY_BAND = (5.0, 50.0)


class TsneDiverged(FloatingPointError):
    def __init__(self, iteration: int):
        super().__init__(f"non-finite embedding coordinates at iteration {iteration}")
        self.iteration = iteration


@dataclass(frozen=True)
class TsneConfig:
    perplexity: float = 30.0
    early_exaggeration: float = 12.0
    exaggeration_iters: int = 250
    learning_rate: float | None = None  # default max(N/12, 50)
    n_iter: int = 1000
    mode: str = "auto"  # "exact" | "barnes_hut" | "auto"
    theta: float = 0.5
    momentum_early: float = 0.5
    momentum_late: float = 0.8
    momentum_switch: int = 250
    dense_limit: int = 5000
    knn_factor: int = 3
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.theta <= 1.0):
            raise ValueError(f"theta must be in [0, 1], got {self.theta}")
        if not PERPLEXITY_BAND[0] <= self.perplexity <= PERPLEXITY_BAND[1]:
            warnings.warn(
                f"perplexity {self.perplexity} outside the recommended "
                f"range {list(PERPLEXITY_BAND)}"
            )


@dataclass
class EmbeddingPoint:
    id: int
    x: float
    y: float


@dataclass
class Affinities:
    """Symmetrized, normalized pairwise affinities.

    Dense mode stores the full matrix; sparse mode stores CSR-style arrays
    over each point's neighbor set.
    """

    n: int
    perplexity: float
    sigmas: np.ndarray
    dense: np.ndarray | None = None
    indptr: np.ndarray | None = None
    indices: np.ndarray | None = None
    data: np.ndarray | None = None

    @property
    def is_dense(self) -> bool:
        return self.dense is not None

    def to_dense(self) -> np.ndarray:
        if self.dense is not None:
            return self.dense
        out = np.zeros((self.n, self.n))
        for i in range(self.n):
            sl = slice(self.indptr[i], self.indptr[i + 1])
            out[i, self.indices[sl]] = self.data[sl]
        return out


def _entropy_bits(p: np.ndarray) -> float:
    nz = p[p > 0]
    return float(-np.sum(nz * np.log2(nz)))


def perplexity_search(sq_dists: np.ndarray, target: float,
                      max_iter: int = 200, tol: float = 1e-5):
    """Conditional Gaussian probabilities whose perplexity matches ``target``.

    Binary search on the precision beta = 1 / (2 sigma^2) against the
    log2-perplexity. Rows made of near-duplicate points cannot reach a lower
    perplexity; those fall back to a uniform distribution over the nearest
    ceil(target) neighbors, with a warning.
    """
    d = np.asarray(sq_dists, dtype=float)
    if d.size < 2:
        raise ValueError("need at least 2 neighbors")
    if not (0 < target < d.size + 1):
        raise ValueError(f"target perplexity {target} out of range")
    target_h = np.log2(target)
    d = d - d.min()

    beta, beta_lo, beta_hi = 1.0, 0.0, np.inf
    p = None
    for _ in range(max_iter):
        w = np.exp(-d * beta)
        sw = w.sum()
        if sw <= 0:
            h = 0.0
            p = np.zeros_like(d)
        else:
            p = w / sw
            h = _entropy_bits(p)
        if abs(h - target_h) < tol:
            sigma = float(np.sqrt(0.5 / beta)) if beta > 0 else float("inf")
            return p, sigma
        if h > target_h:
            beta_lo = beta
            beta = beta * 2.0 if beta_hi == np.inf else 0.5 * (beta + beta_hi)
        else:
            beta_hi = beta
            beta = beta / 2.0 if beta_lo == 0.0 else 0.5 * (beta + beta_lo)
    spread = _entropy_bits(p) if p is not None else 0.0
    warnings.warn(
        f"perplexity {target} unattainable (row entropy {2 ** spread:.2f}); "
        "falling back to uniform nearest neighbors"
    )
    k = min(int(np.ceil(target)), d.size)
    p = np.zeros_like(d)
    nearest = np.argsort(d, kind="stable")[:k]
    p[nearest] = 1.0 / k
    return p, float("nan")


class VpTree:
    """Vantage-point tree over row vectors, for Euclidean k-NN queries."""

    __slots__ = ("points", "_nodes")

    def __init__(self, points: np.ndarray):
        self.points = np.asarray(points, dtype=float)
        # node: (index, radius, inside_node, outside_node) or leaf index list
        self._nodes = self._build(np.arange(len(self.points)))

    def _build(self, idx: np.ndarray):
        if idx.size == 0:
            return None
        if idx.size <= 8:
            return ("leaf", idx)
        vp = idx[0]
        rest = idx[1:]
        dist = np.linalg.norm(self.points[rest] - self.points[vp], axis=1)
        median = float(np.median(dist))
        inside = rest[dist <= median]
        outside = rest[dist > median]
        if inside.size == 0 or outside.size == 0:
            return ("leaf", idx)
        return ("node", vp, median, self._build(inside), self._build(outside))

    def query(self, q: np.ndarray, k: int, skip: int = -1) -> np.ndarray:
        """Indices of the k nearest points to q, optionally skipping one index."""
        import heapq

        heap: list[tuple[float, int]] = []  # max-heap via negated distances

        def consider(i_arr):
            dists = np.linalg.norm(self.points[i_arr] - q, axis=1)
            for i, dist in zip(i_arr, dists):
                if i == skip:
                    continue
                if len(heap) < k:
                    heapq.heappush(heap, (-dist, int(i)))
                elif dist < -heap[0][0]:
                    heapq.heapreplace(heap, (-dist, int(i)))

        def visit(node):
            if node is None:
                return
            if node[0] == "leaf":
                consider(node[1])
                return
            _, vp, median, inside, outside = node
            dist = float(np.linalg.norm(self.points[vp] - q))
            if vp != skip:
                if len(heap) < k:
                    heapq.heappush(heap, (-dist, vp))
                elif dist < -heap[0][0]:
                    heapq.heapreplace(heap, (-dist, vp))
            tau = np.inf if len(heap) < k else -heap[0][0]
            if dist <= median:
                visit(inside)
                tau = np.inf if len(heap) < k else -heap[0][0]
                if dist + tau > median:
                    visit(outside)
            else:
                visit(outside)
                tau = np.inf if len(heap) < k else -heap[0][0]
                if dist - tau <= median:
                    visit(inside)

        visit(self._nodes)
        return np.array([i for _, i in sorted((-d, i) for d, i in heap)])


def _check_row_perplexity(p: np.ndarray, target: float, sigma: float,
                          tol: float = 1e-3):
    """Per-row invariant: conditional perplexity ~ target; fallback rows
    (NaN sigma, duplicates) are exempt."""
    if np.isnan(sigma):
        return
    perp = 2.0 ** _entropy_bits(p)
    if abs(perp - target) > tol:
        raise AssertionError(
            f"row perplexity {perp} misses target {target} by more than {tol}"
        )


def _check_affinities(aff: Affinities, tol: float = 1e-9):
    p = aff.to_dense()
    if np.abs(p - p.T).max() > tol:
        raise AssertionError("affinity matrix is not symmetric")
    if abs(p.sum() - 1.0) > tol:
        raise AssertionError(f"affinities sum to {p.sum()}, expected 1")
    if np.any(np.diag(p) != 0):
        raise AssertionError("affinity diagonal must be zero")


def build_affinities(codes: np.ndarray, config: TsneConfig) -> Affinities:
    """Symmetrized affinities P = (P(j|i) + P(i|j)) / 2N.

    Dense all-pairs for N up to the dense limit, otherwise conditionals are
    restricted to each point's 3*perplexity nearest neighbors found with a
    vantage-point tree. Symmetry, normalization, and the diagonal are
    verified on every build.
    """
    x = np.asarray(codes, dtype=float)
    n = x.shape[0]
    if n < 4:
        raise ValueError("need at least 4 points")
    use_dense = config.mode == "exact" or (config.mode == "auto" and n <= config.dense_limit)
    sigmas = np.zeros(n)
    target = config.perplexity
    if target >= n - 1:
        target = max(1.5, (n - 1) * 0.75)
        warnings.warn(
            f"perplexity {config.perplexity} too large for {n} points; using {target}"
        )
    if use_dense and n <= config.dense_limit:
        sq = np.sum(x * x, axis=1)
        d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (x @ x.T), 0.0)
        cond = np.zeros((n, n))
        for i in range(n):
            row = np.delete(d2[i], i)
            p, sigmas[i] = perplexity_search(row, target)
            _check_row_perplexity(p, target, sigmas[i])
            cond[i, :i] = p[:i]
            cond[i, i + 1:] = p[i:]
        p_sym = (cond + cond.T) / (2.0 * n)
        aff = Affinities(n=n, perplexity=config.perplexity, sigmas=sigmas, dense=p_sym)
    else:
        k = min(config.knn_factor * int(np.ceil(target)), n - 1)
        tree = VpTree(x)
        rows: list[np.ndarray] = []
        cols: list[np.ndarray] = []
        vals: list[np.ndarray] = []
        for i in range(n):
            nb = tree.query(x[i], k, skip=i)
            d2 = np.sum((x[nb] - x[i]) ** 2, axis=1)
            row_target = min(target, k - 1)
            p, sigmas[i] = perplexity_search(d2, row_target)
            _check_row_perplexity(p, row_target, sigmas[i])
            rows.append(np.full(nb.size, i))
            cols.append(nb)
            vals.append(p)
        ri = np.concatenate(rows)
        ci = np.concatenate(cols)
        vi = np.concatenate(vals)
        # symmetrize: accumulate (i,j) and (j,i) then halve, normalize by N
        order = np.lexsort((np.concatenate([ci, ri]), np.concatenate([ri, ci])))
        all_r = np.concatenate([ri, ci])[order]
        all_c = np.concatenate([ci, ri])[order]
        all_v = np.concatenate([vi, vi])[order] / (2.0 * n)
        # collapse duplicate (r, c) pairs
        key_change = np.ones(all_r.size, dtype=bool)
        key_change[1:] = (all_r[1:] != all_r[:-1]) | (all_c[1:] != all_c[:-1])
        group = np.cumsum(key_change) - 1
        uniq_r = all_r[key_change]
        uniq_c = all_c[key_change]
        uniq_v = np.bincount(group, weights=all_v)
        indptr = np.zeros(n + 1, dtype=int)
        np.add.at(indptr, uniq_r + 1, 1)
        indptr = np.cumsum(indptr)
        aff = Affinities(
            n=n, perplexity=config.perplexity, sigmas=sigmas,
            indptr=indptr, indices=uniq_c, data=uniq_v,
        )
    _check_affinities(aff)
    return aff


# --------------------------------------------------------------------------
# gradient machinery

class QuadTree:
    """Center-of-mass quadtree over 2D points for Barnes-Hut summaries."""

    def __init__(self, points: np.ndarray):
        self.points = points
        lo = points.min(axis=0)
        hi = points.max(axis=0)
        center = (lo + hi) / 2.0
        width = float(max(hi[0] - lo[0], hi[1] - lo[1])) + 1e-12
        self.root = self._build(np.arange(len(points)), center, width)

    def _build(self, idx, center, width):
        com = self.points[idx].mean(axis=0)
        node = {"count": idx.size, "com": com, "width": width, "children": None}
        if idx.size > 1 and width > 1e-10:
            pts = self.points[idx]
            east = pts[:, 0] > center[0]
            north = pts[:, 1] > center[1]
            shift = width / 4.0
            children = []
            for ew, ns, dx, dy in (
                (False, False, -shift, -shift),
                (False, True, -shift, shift),
                (True, False, shift, -shift),
                (True, True, shift, shift),
            ):
                sel = idx[(east == ew) & (north == ns)]
                if sel.size:
                    children.append(
                        self._build(sel, center + np.array([dx, dy]), width / 2.0)
                    )
            node["children"] = children
        return node

    def repulsion(self, query: np.ndarray, theta: float):
        """Approximate sum_j w_ij^2 (y_i - y_j) and Z_i = sum_j w_ij per query.

        Node-major traversal: each node either summarizes (cell small seen
        from the query point) or forwards the still-active queries to its
        children. Self-interactions fall out via the zero-distance skip.
        """
        nq = query.shape[0]
        force = np.zeros((nq, 2))
        zsum = np.zeros(nq)
        theta2 = theta * theta

        def visit(node, active):
            diff = query[active] - node["com"]
            d2 = np.sum(diff * diff, axis=1)
            if node["children"] is None:
                ok = d2 > 0
                w = 1.0 / (1.0 + d2[ok])
                zsum[active[ok]] += node["count"] * w
                force[active[ok]] += node["count"] * (w * w)[:, None] * diff[ok]
                return
            summarize = (node["width"] * node["width"]) < theta2 * d2
            done = active[summarize]
            if done.size:
                w = 1.0 / (1.0 + d2[summarize])
                zsum[done] += node["count"] * w
                force[done] += node["count"] * (w * w)[:, None] * diff[summarize]
            rest = active[~summarize]
            if rest.size:
                for child in node["children"]:
                    visit(child, rest)

        visit(self.root, np.arange(nq))
        return force, zsum


def _attractive_forces(aff: Affinities, y: np.ndarray, exaggeration: float):
    n = y.shape[0]
    if aff.is_dense:
        diff = y[:, None, :] - y[None, :, :]
        d2 = np.sum(diff * diff, axis=2)
        w = 1.0 / (1.0 + d2)
        np.fill_diagonal(w, 0.0)
        pw = (exaggeration * aff.dense) * w
        return (pw.sum(axis=1)[:, None] * y) - (pw @ y), w
    forces = np.zeros_like(y)
    for i in range(n):
        sl = slice(aff.indptr[i], aff.indptr[i + 1])
        nb = aff.indices[sl]
        diff = y[i] - y[nb]
        w = 1.0 / (1.0 + np.sum(diff * diff, axis=1))
        pw = exaggeration * aff.data[sl] * w
        forces[i] = pw @ diff
    return forces, None


def tsne_gradient(aff: Affinities, y: np.ndarray, config: TsneConfig,
                  exaggeration: float = 1.0, mode: str | None = None):
    """KL gradient 4 * sum_j (p_ij - q_ij) w_ij (y_i - y_j)."""
    mode = mode or config.mode
    n = y.shape[0]
    if mode == "auto":
        mode = "exact" if n <= 2000 else "barnes_hut"
    attract, w = _attractive_forces(aff, y, exaggeration)
    if mode == "exact":
        if w is None:
            diff = y[:, None, :] - y[None, :, :]
            d2 = np.sum(diff * diff, axis=2)
            w = 1.0 / (1.0 + d2)
            np.fill_diagonal(w, 0.0)
        z = w.sum()
        qw = w * w / z
        repulse = (qw.sum(axis=1)[:, None] * y) - (qw @ y)
        return 4.0 * (attract - repulse)
    tree = QuadTree(y)
    force, zsum = tree.repulsion(y, config.theta)
    z = zsum.sum()
    return 4.0 * (attract - force / z)


def kl_divergence(aff: Affinities, y: np.ndarray) -> float:
    """Exact KL(P || Q) of the current embedding (O(N^2))."""
    n = y.shape[0]
    diff = y[:, None, :] - y[None, :, :]
    w = 1.0 / (1.0 + np.sum(diff * diff, axis=2))
    np.fill_diagonal(w, 0.0)
    z = w.sum()
    p = aff.to_dense()
    mask = p > 0
    q = np.maximum(w / z, 1e-300)
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


@dataclass
class OptimizerState:
    velocity: np.ndarray
    iteration: int = 0
    kl_log: list[tuple[int, float]] = field(default_factory=list)


def tsne_step(aff: Affinities, y: np.ndarray, state: OptimizerState,
              config: TsneConfig, learning_rate: float,
              compute_kl: bool = False):
    """One gradient/momentum update. Returns (new coords, KL or None)."""
    it = state.iteration
    exaggeration = config.early_exaggeration if it < config.exaggeration_iters else 1.0
    momentum = config.momentum_early if it < config.momentum_switch else config.momentum_late
    grad = tsne_gradient(aff, y, config, exaggeration)
    state.velocity = momentum * state.velocity - learning_rate * grad
    y_new = y + state.velocity
    if not np.all(np.isfinite(y_new)):
        raise TsneDiverged(it)
    state.iteration += 1
    kl = kl_divergence(aff, y_new) if compute_kl else None
    return y_new, kl


def run_tsne(codes: np.ndarray, config: TsneConfig = TsneConfig(),
             ids: list[int] | None = None, kl_every: int = 50):
    """Embed code vectors into 2D; returns (points, kl_log).

    Initial coordinates are Gaussian with standard deviation 1e-4 under the
    config seed; the exact KL divergence is logged every ``kl_every``
    iterations.
    """
    x = np.asarray(codes, dtype=float)
    n = x.shape[0]
    if n < 4:
        raise ValueError("need at least 4 points")
    if ids is None:
        ids = list(range(n))
    if len(ids) != n:
        raise ValueError("ids length must match codes")
    aff = build_affinities(x, config)
    rng = np.random.default_rng(config.seed)
    y = rng.normal(0.0, 1e-4, (n, 2))
    lr = config.learning_rate if config.learning_rate is not None else max(n / 12.0, 50.0)
    state = OptimizerState(velocity=np.zeros_like(y))
    for it in range(config.n_iter):
        want_kl = (it % kl_every == kl_every - 1) or it == config.n_iter - 1
        y, kl = tsne_step(aff, y, state, config, lr, compute_kl=want_kl)
        if kl is not None:
            state.kl_log.append((it, kl))
            log.debug("tsne iteration %d KL %.6f", it, kl)
    points = [EmbeddingPoint(id=ids[i], x=float(y[i, 0]), y=float(y[i, 1])) for i in range(n)]
    return points, state.kl_log


# --------------------------------------------------------------------------
# small clustering helpers for validation harnesses

def kmeans(points: np.ndarray, k: int, seed: int = 0, n_init: int = 10,
           max_iter: int = 100) -> np.ndarray:
    """Plain k-means with k-means++ seeding; returns labels. Used by the
    validation harnesses, not by the embedding itself."""
    x = np.asarray(points, dtype=float)
    rng = np.random.default_rng(seed)
    best_labels, best_inertia = None, np.inf
    for _ in range(n_init):
        centers = [x[rng.integers(len(x))]]
        for _ in range(k - 1):
            d2 = np.min(
                [np.sum((x - c) ** 2, axis=1) for c in centers], axis=0
            )
            total = d2.sum()
            if total <= 0:
                centers.append(x[rng.integers(len(x))])
                continue
            centers.append(x[rng.choice(len(x), p=d2 / total)])
        c = np.array(centers)
        for _ in range(max_iter):
            d2 = ((x[:, None, :] - c[None, :, :]) ** 2).sum(axis=2)
            labels = d2.argmin(axis=1)
            newc = np.array([
                x[labels == j].mean(axis=0) if np.any(labels == j) else c[j]
                for j in range(k)
            ])
            if np.allclose(newc, c):
                break
            c = newc
        inertia = float(((x - c[labels]) ** 2).sum())
        if inertia < best_inertia:
            best_inertia, best_labels = inertia, labels
    return best_labels


def cluster_purity(labels_pred: np.ndarray, labels_true) -> float:
    """Fraction of points whose cluster's majority class matches their own."""
    labels_true = np.asarray(labels_true)
    total = 0
    for c in np.unique(labels_pred):
        members = labels_true[labels_pred == c]
        _, counts = np.unique(members, return_counts=True)
        total += counts.max()
    return total / len(labels_true)


def perplexity_sensitivity(codes: np.ndarray, labels, perplexities=(5.0, 30.0, 50.0),
                           k: int | None = None, config: TsneConfig = TsneConfig()) -> dict:
    """Cluster purity of the embedding across perplexity settings."""
    labels = np.asarray(labels)
    if k is None:
        k = len(np.unique(labels))
    out = {}
    for perp in perplexities:
        cfg = TsneConfig(
            perplexity=perp, n_iter=config.n_iter, seed=config.seed,
            mode=config.mode, theta=config.theta,
            learning_rate=config.learning_rate,
        )
        pts, _ = run_tsne(codes, cfg)
        y = np.array([[p.x, p.y] for p in pts])
        out[perp] = cluster_purity(kmeans(y, k, seed=config.seed), labels)
    return out

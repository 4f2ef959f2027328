"""Object importance from biased random walks and skip-gram embeddings.

Each object is a graph node; spatial relations are edges weighted by the
reciprocal horizontal distance.  Walks step with probability proportional to

    w(i, j) = k0 / dist_xy(i, j) + (1 - k0) * size(j)

and a skip-gram model with negative sampling embeds the walk corpus.  An
object's importance is the cosine similarity to the target mapped to (0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import DegenerateCorpus, EmptyScene, UnknownNode, UnknownTarget
from .scene import Scene, dist_xy

EPS_DIST = 0.01
EPS_SCORE = 1e-6
SIGMOID_MAX = 6.0
SIGMOID_BINS = 1000


@dataclass(frozen=True)
class WalkParams:
    k0: float = 0.7
    walks_per_node: int = 10
    walk_length: int = 8
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.k0 <= 1.0:
            raise ValueError("k0 must lie in [0, 1]")
        if self.walks_per_node < 1 or self.walk_length < 2:
            raise ValueError("walks_per_node >= 1 and walk_length >= 2 required")


@dataclass(frozen=True)
class EmbedParams:
    dim: int = 32
    window: int = 3
    negatives: int = 5
    epochs: int = 50
    learning_rate: float = 0.025
    seed: int = 0

    def __post_init__(self):
        if self.dim < 2 or self.window < 1 or self.negatives < 1:
            raise ValueError("dim >= 2, window >= 1, negatives >= 1 required")
        if self.epochs < 0 or self.learning_rate <= 0:
            raise ValueError("epochs >= 0 and learning_rate > 0 required")


@dataclass
class SceneGraph:
    ids: list
    sizes: np.ndarray
    positions: np.ndarray
    edges: list  # (parent index, child index, weight)
    neighbors: list = field(default_factory=list)  # per node: [(j, dist), ...]

    def __len__(self):
        return len(self.ids)

    def node(self, key) -> int:
        if isinstance(key, (int, np.integer)):
            if 0 <= key < len(self.ids):
                return int(key)
        elif key in self.ids:
            return self.ids.index(key)
        raise UnknownNode(f"no node {key!r}")


@dataclass
class ImportanceResult:
    scores: dict
    threshold_used: float
    selected: set
    target: str | None = None

    def to_csv(self, path=None) -> str:
        lines = ["id,score,selected"]
        for oid, s in self.scores.items():
            lines.append(f"{oid},{s:.6f},{int(oid in self.selected)}")
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w") as f:
                f.write(text)
        return text


def build_scene_graph(scene: Scene) -> SceneGraph:
    if len(scene) == 0:
        raise EmptyScene("scene has no objects")
    ids = scene.ids
    vols = np.array([o.bbox.volume() for o in scene.objects])
    vmax = vols.max()
    sizes = vols / vmax if vmax > 0 else np.ones_like(vols)
    pos = np.array([o.position for o in scene.objects], dtype=float)
    edges = []
    nbrs = [dict() for _ in ids]
    for r in scene.relations:
        i, j = scene.index(r.parent_id), scene.index(r.child_id)
        d = max(dist_xy(pos[i], pos[j]), EPS_DIST)
        edges.append((i, j, 1.0 / d))
        # walks ignore direction; a pair related twice is still one neighbour
        nbrs[i][j] = d
        nbrs[j][i] = d
    neighbors = [sorted(n.items()) for n in nbrs]
    return SceneGraph(ids, sizes, pos, edges, neighbors)


def _weights(graph: SceneGraph, i: int, k0: float) -> tuple[np.ndarray, np.ndarray]:
    nb = graph.neighbors[i]
    if not nb:
        return np.zeros(0, dtype=int), np.zeros(0)
    js = np.array([j for j, _ in nb])
    d = np.array([d for _, d in nb])
    w = k0 / d + (1.0 - k0) * graph.sizes[js]
    return js, w


def transition_probs(graph: SceneGraph, node, k0: float) -> dict:
    """Neighbour -> probability for one step of the biased walk."""
    i = graph.node(node)
    js, w = _weights(graph, i, k0)
    if len(js) == 0:
        return {}
    tot = w.sum()
    p = w / tot if tot > 0 else np.full(len(w), 1.0 / len(w))
    return {int(j): float(v) for j, v in zip(js, p)}


def random_walks(graph: SceneGraph, params: WalkParams) -> list[list[int]]:
    """``walks_per_node`` walks from every node.

    Each start node draws from its own stream SeedSequence([seed, node]), so
    the corpus does not depend on the order nodes are processed in.
    """
    if len(graph) == 0:
        raise EmptyScene("graph has no nodes")
    n = len(graph)
    deg = max(len(nb) for nb in graph.neighbors)
    # padded cumulative tables; pads sit at 1.0 so they are never selected
    nxt = np.zeros((n, max(deg, 1)), dtype=np.int64)
    cum = np.ones((n, max(deg, 1)))
    for i in range(n):
        js, w = _weights(graph, i, params.k0)
        if len(js) == 0:
            continue
        tot = w.sum()
        p = w / tot if tot > 0 else np.full(len(w), 1.0 / len(w))
        nxt[i, : len(js)] = js
        cum[i, : len(js)] = np.cumsum(p)
        cum[i, len(js) - 1] = 1.0
    steps = params.walk_length - 1
    R = params.walks_per_node
    u = np.empty((n * R, steps))
    for i in range(n):
        rng = np.random.default_rng(np.random.SeedSequence([params.seed, i]))
        u[i * R : (i + 1) * R] = rng.random((R, steps))
    paths = np.empty((n * R, steps + 1), dtype=np.int64)
    paths[:, 0] = np.repeat(np.arange(n), R)
    for s in range(steps):
        cur = paths[:, s]
        k = (cum[cur] <= u[:, s, None]).sum(axis=1)
        paths[:, s + 1] = nxt[cur, np.minimum(k, deg - 1 if deg else 0)]
    # undirected edges mean a node with any neighbour never dead-ends
    has_nb = np.array([len(nb) > 0 for nb in graph.neighbors])
    walks = [row.tolist() if has_nb[row[0]] else [int(row[0])] for row in paths]
    return walks


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def sgns_loss_and_grads(u, v_pos, v_negs):
    """Negative-sampling loss for one (center, context, negatives) triple.

    loss = -log s(u.v_pos) - sum_n log s(-u.v_n); returns
    (loss, d/du, d/dv_pos, d/dv_negs).
    """
    u = np.asarray(u, dtype=float)
    v_pos = np.asarray(v_pos, dtype=float)
    v_negs = np.atleast_2d(np.asarray(v_negs, dtype=float))
    sp = u @ v_pos
    sn = v_negs @ u
    loss = np.logaddexp(0.0, -sp) + np.sum(np.logaddexp(0.0, sn))
    gp = _sigmoid(sp) - 1.0
    gn = _sigmoid(sn)
    du = gp * v_pos + gn @ v_negs
    return float(loss), du, gp * u, gn[:, None] * u[None, :]


def skipgram_pairs(walks, window: int) -> tuple[np.ndarray, np.ndarray]:
    centers, contexts = [], []
    by_len = {}
    for w in walks:
        by_len.setdefault(len(w), []).append(w)
    for n, group in sorted(by_len.items()):
        W = np.asarray(group, dtype=np.int64)
        for off in range(1, min(window, n - 1) + 1):
            centers += [W[:, :-off], W[:, off:]]
            contexts += [W[:, off:], W[:, :-off]]
    if not centers:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate([c.ravel() for c in centers]), np.concatenate([c.ravel() for c in contexts])


def alias_table(weights) -> tuple[np.ndarray, np.ndarray]:
    """Walker alias tables: draw k uniformly, keep it with prob[k], else take alias[k]."""
    w = np.asarray(weights, dtype=float)
    n = len(w)
    scaled = w / w.sum() * n
    prob = np.ones(n)
    alias = np.arange(n)
    small = [k for k in range(n) if scaled[k] < 1.0]
    large = [k for k in range(n) if scaled[k] >= 1.0]
    while small and large:
        s, g = small.pop(), large.pop()
        prob[s], alias[s] = scaled[s], g
        scaled[g] -= 1.0 - scaled[s]
        (small if scaled[g] < 1.0 else large).append(g)
    return prob, alias


def _sigmoid_table():
    x = (np.arange(SIGMOID_BINS) + 0.5) / SIGMOID_BINS * 2 * SIGMOID_MAX - SIGMOID_MAX
    return 1.0 / (1.0 + np.exp(-x))


@njit(cache=True, inline="always")
def _draw(state, n):
    # integer in [0, n) from the top 32 bits of an LCG state, no division
    return np.int64(((state >> np.uint64(32)) * np.uint64(n)) >> np.uint64(32))


@njit(cache=True, fastmath=True)
def _sgns_train(W_in, W_out, walks, lengths, window, negatives, epochs, lr0, noise_prob, noise_alias, sig, seed, snapshots):
    """Sequential per-pair SGD over the walk corpus, word2vec style.

    Negatives come from Walker alias tables; ``noise_prob`` holds the keep
    thresholds scaled to 2**32.

    Each epoch visits the walks in a shuffled order; every center uses an
    effective window drawn from 1..window.  ``snapshots`` (epochs+1, V, D)
    receives W_in after each epoch when it is nonempty.
    """
    state = np.uint64(seed)
    mul = np.uint64(25214903917)
    inc = np.uint64(11)
    D = W_in.shape[1]
    Vu = np.uint64(noise_prob.shape[0])
    mask = np.uint64(0xFFFFFFFF)
    dt = W_in.dtype.type
    one, zero, smax = dt(1.0), dt(0.0), dt(SIGMOID_MAX)
    scale = dt(sig.shape[0] / (2.0 * SIGMOID_MAX))
    n_walks = walks.shape[0]
    total = 0
    for w in range(n_walks):
        total += lengths[w]
    total = max(total * epochs, 1)
    order = np.arange(n_walks)
    grad = np.empty(D, dtype=W_in.dtype)
    u = np.empty(D, dtype=W_in.dtype)
    done = 0
    if snapshots.shape[0] > 0:
        snapshots[0] = W_in
    for e in range(epochs):
        for i in range(n_walks - 1, 0, -1):
            state = state * mul + inc
            j = _draw(state, i + 1)
            order[i], order[j] = order[j], order[i]
        for w in order:
            n = lengths[w]
            for a in range(n):
                lr = dt(lr0 * max(1.0 - done / total, 1e-4))
                done += 1
                state = state * mul + inc
                b = 1 + _draw(state, window)
                c = walks[w, a]
                for t in range(max(0, a - b), min(n, a + b + 1)):
                    if t == a:
                        continue
                    ctx = walks[w, t]
                    for d in range(D):
                        u[d] = W_in[c, d]
                        grad[d] = zero
                    for k in range(negatives + 1):
                        if k == 0:
                            o = ctx
                            label = one
                        else:
                            # one draw: high half picks the alias bucket, low half is the coin
                            state = state * mul + inc
                            x = (state >> np.uint64(32)) * Vu
                            o = np.int64(x >> np.uint64(32))
                            if (x & mask) >= noise_prob[o]:
                                o = noise_alias[o]
                            if o == ctx:
                                continue
                            label = zero
                        f = zero
                        for d in range(D):
                            f += u[d] * W_out[o, d]
                        if f >= smax:
                            g = lr * (label - one)
                        elif f <= -smax:
                            g = lr * label
                        else:
                            g = lr * (label - sig[np.int64((f + smax) * scale)])
                        for d in range(D):
                            grad[d] += g * W_out[o, d]
                            W_out[o, d] += g * u[d]
                    for d in range(D):
                        W_in[c, d] += grad[d]
        if snapshots.shape[0] > 0:
            snapshots[e + 1] = W_in


def train_embeddings(walks, params: EmbedParams, nodes=None, return_history: bool = False):
    """Skip-gram with negative sampling, per-pair SGD, linearly decaying rate.

    Returns a dict node -> vector (the input embeddings).  Nodes listed in
    ``nodes`` but absent from training pairs keep their seeded initial
    vectors.  With ``return_history`` a list of per-epoch snapshots (epoch 0
    is the initialisation) is returned as a second value.
    """
    walks = [list(w) for w in walks]
    if not walks:
        raise DegenerateCorpus("empty corpus")
    vocab = sorted({int(v) for w in walks for v in w} | set(int(v) for v in (nodes or ())))
    index = {v: k for k, v in enumerate(vocab)}
    V, D = len(vocab), params.dim
    rng = np.random.default_rng(params.seed)
    # float32 training state: half the memory traffic of float64 in the inner loops
    W_in = ((rng.random((V, D)) - 0.5) / D).astype(np.float32)
    W_out = np.zeros((V, D), dtype=np.float32)
    c_raw, _ = skipgram_pairs(walks, params.window)
    if len(c_raw) == 0 and len({v for w in walks for v in w}) > 1:
        raise DegenerateCorpus("walks contain no (center, context) pairs")
    history = np.zeros((params.epochs + 1 if return_history else 0, V, D), dtype=np.float32)
    if len(c_raw):
        remap = np.zeros(max(vocab) + 1, dtype=np.int64)
        remap[vocab] = np.arange(V)
        trained = [w for w in walks if len(w) > 1]
        lengths = np.array([len(w) for w in trained], dtype=np.int64)
        padded = np.zeros((len(trained), lengths.max()), dtype=np.int64)
        for k, w in enumerate(trained):
            padded[k, : len(w)] = remap[w]
        freq = np.bincount(np.concatenate([remap[w] for w in trained]), minlength=V)
        prob, alias = alias_table(freq.astype(float) ** 0.75)
        prob = np.minimum(np.floor(prob * 2.0**32), 2.0**32).astype(np.uint64)
        seed = int(rng.integers(2**31 - 1))
        _sgns_train(W_in, W_out, padded, lengths, params.window, params.negatives, params.epochs,
                    params.learning_rate, prob, alias, _sigmoid_table().astype(np.float32), seed, history)
    elif return_history:
        history[:] = W_in
    emb = {v: W_in[index[v]].astype(float) for v in vocab}
    if return_history:
        return emb, [h.astype(float) for h in history]
    return emb


def cosine(a, b) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def importance_scores(embeddings: dict, target) -> dict:
    """f(o, target) = clamp((cos + 1) / 2, 1e-6, 1); exactly 1 for the target."""
    if target not in embeddings:
        raise UnknownTarget(f"no embedding for target {target!r}")
    vt = embeddings[target]
    out = {}
    for k, v in embeddings.items():
        if k == target:
            out[k] = 1.0
        else:
            out[k] = float(min(max((cosine(v, vt) + 1.0) / 2.0, EPS_SCORE), 1.0))
    return out


def select_objects(scores: dict, alpha: float, target=None) -> ImportanceResult:
    if not scores:
        raise ValueError("scores must be nonempty")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    selected = {k for k, s in scores.items() if s >= alpha}
    if target is not None:
        selected.add(target)
    return ImportanceResult(dict(scores), alpha, selected, target)


def predict_importance(scene: Scene, target: str, walk: WalkParams | None = None, embed: EmbedParams | None = None) -> dict:
    """Object id -> importance score relative to ``target``."""
    walk = walk or WalkParams()
    embed = embed or EmbedParams()
    if target not in scene:
        raise UnknownTarget(f"no object {target!r} in scene")
    graph = build_scene_graph(scene)
    walks = random_walks(graph, walk)
    emb = train_embeddings(walks, embed, nodes=range(len(graph)))
    scores = importance_scores(emb, scene.index(target))
    return {graph.ids[k]: scores[k] for k in range(len(graph))}

"""Community-propensity biased matrix factorisation (ConSVD).

Rating model::

    r_hat(u, i) = mu + b_u + b_i + q_i . (p_u + sum_{c : u in c} alpha_uc p_c)

trained by SGD on the per-rating objective
(r - r_hat)^2 + reg * (|q_i|^2 + |p_u|^2 + sum_c |p_c|^2 + b_u^2 + b_i^2).
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from functools import cached_property

import numpy as np

from cdbench._accel import njit
from cdbench.errors import ParseError, ValidationError
from cdbench.graph import Graph, iter_records
from cdbench.communities.cover import Cover
from cdbench.metrics import rmse_mae

log = logging.getLogger(__name__)

RATING_MIN = 1.0
RATING_MAX = 5.0
CHECKPOINT_VERSION = 1


@dataclass(frozen=True, eq=False)
class RatingsTable:
    user_ids: tuple[str, ...]
    item_ids: tuple[str, ...]
    users: np.ndarray
    items: np.ndarray
    values: np.ndarray
    clamped: int = 0

    def __len__(self) -> int:
        return len(self.values)

    @cached_property
    def user_index(self) -> dict[str, int]:
        return {u: i for i, u in enumerate(self.user_ids)}

    @cached_property
    def item_index(self) -> dict[str, int]:
        return {u: i for i, u in enumerate(self.item_ids)}

    def subset(self, rows) -> RatingsTable:
        rows = np.asarray(rows, dtype=np.int64)
        return RatingsTable(self.user_ids, self.item_ids, self.users[rows], self.items[rows], self.values[rows])

    @classmethod
    def from_triples(cls, triples) -> RatingsTable:
        latest: dict[tuple[str, str], float] = {}
        for u, i, r in triples:
            latest[(str(u), str(i))] = float(r)
        return cls._build(latest, 0)

    @classmethod
    def _build(cls, latest: dict[tuple[str, str], float], clamped: int) -> RatingsTable:
        user_ids: dict[str, int] = {}
        item_ids: dict[str, int] = {}
        users = np.empty(len(latest), dtype=np.int64)
        items = np.empty(len(latest), dtype=np.int64)
        values = np.empty(len(latest), dtype=np.float64)
        for t, ((u, i), r) in enumerate(latest.items()):
            users[t] = user_ids.setdefault(u, len(user_ids))
            items[t] = item_ids.setdefault(i, len(item_ids))
            values[t] = r
        return cls(tuple(user_ids), tuple(item_ids), users, items, values, clamped)


def load_ratings(source, rating_col: int = 2) -> RatingsTable:
    """Read ``user item rating`` lines; later duplicates win, out-of-range ratings are clamped."""
    latest: dict[tuple[str, str], float] = {}
    clamped = 0
    for lineno, fields in iter_records(source, max(3, rating_col + 1)):
        try:
            r = float(fields[rating_col])
        except ValueError:
            raise ParseError(f"bad rating {fields[rating_col]!r}", lineno) from None
        if not np.isfinite(r):
            raise ParseError(f"bad rating {fields[rating_col]!r}", lineno)
        if r < RATING_MIN or r > RATING_MAX:
            clamped += 1
            r = min(max(r, RATING_MIN), RATING_MAX)
        latest[(fields[0], fields[1])] = r
    if clamped:
        log.warning("clamped %d ratings into [%g, %g]", clamped, RATING_MIN, RATING_MAX)
    return RatingsTable._build(latest, clamped)


def write_ratings(table: RatingsTable, dest) -> None:
    with open(dest, "w", encoding="utf-8") as fh:
        for u, i, r in zip(table.users.tolist(), table.items.tolist(), table.values.tolist()):
            fh.write(f"{table.user_ids[u]}\t{table.item_ids[i]}\t{r:g}\n")


@dataclass(frozen=True)
class TrainConfig:
    d: int = 10
    learning_rate: float = 0.005
    reg_lambda: float = 0.02
    epochs: int = 30
    seed: int = 0
    init_scale: float = 0.05
    adaptive: bool = True
    max_halvings: int = 40

    def __post_init__(self):
        if self.d < 1:
            raise ValidationError("d must be >= 1")
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be > 0")
        if self.reg_lambda < 0:
            raise ValidationError("reg_lambda must be >= 0")
        if self.epochs < 0:
            raise ValidationError("epochs must be >= 0")


@dataclass
class ConSVDModel:
    mu: float
    bu: np.ndarray
    bi: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    Pc: np.ndarray
    comm_ptr: np.ndarray  # per-user CSR into comm_idx / comm_alpha
    comm_idx: np.ndarray
    comm_alpha: np.ndarray
    user_ids: tuple[str, ...]
    item_ids: tuple[str, ...]
    cfg: TrainConfig = field(default_factory=TrainConfig)
    meta: dict = field(default_factory=dict)

    @cached_property
    def user_index(self) -> dict[str, int]:
        return {u: i for i, u in enumerate(self.user_ids)}

    @cached_property
    def item_index(self) -> dict[str, int]:
        return {u: i for i, u in enumerate(self.item_ids)}

    def copy(self) -> ConSVDModel:
        return ConSVDModel(
            self.mu, self.bu.copy(), self.bi.copy(), self.P.copy(), self.Q.copy(), self.Pc.copy(),
            self.comm_ptr, self.comm_idx, self.comm_alpha, self.user_ids, self.item_ids, self.cfg, dict(self.meta),
        )

    def user_vectors(self) -> np.ndarray:
        """p_u + sum_c alpha_uc p_c for every user."""
        z = self.P.copy()
        counts = np.diff(self.comm_ptr)
        if len(self.comm_idx):
            rows = np.repeat(np.arange(len(counts)), counts)
            np.add.at(z, rows, self.comm_alpha[:, None] * self.Pc[self.comm_idx])
        return z

    def predict_index(self, users: np.ndarray, items: np.ndarray) -> np.ndarray:
        z = self.user_vectors()
        return self.mu + self.bu[users] + self.bi[items] + np.einsum("ij,ij->i", self.Q[items], z[users])


def user_communities(
    user_ids, cover: Cover | None, alpha: dict | None, graph: Graph | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-user (community, alpha) lists in CSR form.

    Users are matched to cover nodes by external id through ``graph``; without
    a graph the cover is taken to be indexed like ``user_ids``. Users absent
    from the graph get no community term.
    """
    ptr = np.zeros(len(user_ids) + 1, dtype=np.int64)
    idx: list[int] = []
    vals: list[float] = []
    if cover is not None:
        lookup = graph.index if graph is not None else None
        for t, u in enumerate(user_ids):
            v = t if lookup is None else lookup.get(u, -1)
            if 0 <= v < cover.n:
                for c in cover.communities_of(v).tolist():
                    idx.append(c)
                    vals.append(float(alpha.get((v, c), 0.0)) if alpha is not None else 1.0)
            ptr[t + 1] = len(idx)
    return ptr, np.asarray(idx, dtype=np.int64), np.asarray(vals, dtype=np.float64)


def init_model(train: RatingsTable, cover, alpha, cfg: TrainConfig, graph: Graph | None = None) -> ConSVDModel:
    rng = np.random.default_rng(cfg.seed)
    nu, ni = len(train.user_ids), len(train.item_ids)
    k = cover.k if cover is not None else 0
    ptr, idx, vals = user_communities(train.user_ids, cover, alpha, graph)
    s = cfg.init_scale
    return ConSVDModel(
        mu=float(train.values.mean()),
        bu=np.zeros(nu),
        bi=np.zeros(ni),
        P=rng.uniform(-s, s, (nu, cfg.d)),
        Q=rng.uniform(-s, s, (ni, cfg.d)),
        Pc=rng.uniform(-s, s, (k, cfg.d)),
        comm_ptr=ptr,
        comm_idx=idx,
        comm_alpha=vals,
        user_ids=train.user_ids,
        item_ids=train.item_ids,
        cfg=cfg,
        meta={"cover": cover.digest() if cover is not None else None},
    )


@njit
def sgd_epoch(users, items, values, order, mu, bu, bi, P, Q, Pc, comm_ptr, comm_idx, comm_alpha, lr, reg):
    """In-place SGD pass; each step moves parameters by -lr/2 times the per-rating gradient."""
    d = P.shape[1]
    z = np.empty(d)
    for t in range(len(order)):
        s = order[t]
        u = users[s]
        i = items[s]
        for f in range(d):
            z[f] = P[u, f]
        for p in range(comm_ptr[u], comm_ptr[u + 1]):
            c = comm_idx[p]
            a = comm_alpha[p]
            for f in range(d):
                z[f] += a * Pc[c, f]
        pred = mu + bu[u] + bi[i]
        for f in range(d):
            pred += Q[i, f] * z[f]
        e = values[s] - pred
        bu[u] += lr * (e - reg * bu[u])
        bi[i] += lr * (e - reg * bi[i])
        for f in range(d):
            qf = Q[i, f]
            Q[i, f] += lr * (e * z[f] - reg * qf)
            P[u, f] += lr * (e * qf - reg * P[u, f])
            for p in range(comm_ptr[u], comm_ptr[u + 1]):
                c = comm_idx[p]
                Pc[c, f] += lr * (e * comm_alpha[p] * qf - reg * Pc[c, f])


def objective(model: ConSVDModel, table: RatingsTable, reg: float) -> float:
    """Sum over ratings of squared error plus the per-rating regulariser."""
    u, i = table.users, table.items
    err = table.values - model.predict_index(u, i)
    pc_sq = np.sum(model.Pc**2, axis=1)
    comm_sq = np.zeros(len(model.user_ids))
    counts = np.diff(model.comm_ptr)
    if len(model.comm_idx):
        np.add.at(comm_sq, np.repeat(np.arange(len(counts)), counts), pc_sq[model.comm_idx])
    penalty = (
        np.sum(model.Q[i] ** 2, axis=1) + np.sum(model.P[u] ** 2, axis=1) + comm_sq[u] + model.bu[u] ** 2 + model.bi[i] ** 2
    )
    return float(np.sum(err**2) + reg * np.sum(penalty))


def gradients(model: ConSVDModel, table: RatingsTable, reg: float) -> dict[str, np.ndarray]:
    """Exact gradient of :func:`objective` for every parameter group."""
    u, i = table.users, table.items
    z = model.user_vectors()
    err = table.values - model.predict_index(u, i)
    g_bu = np.zeros_like(model.bu)
    g_bi = np.zeros_like(model.bi)
    g_P = np.zeros_like(model.P)
    g_Q = np.zeros_like(model.Q)
    g_Pc = np.zeros_like(model.Pc)
    np.add.at(g_bu, u, -2 * err + 2 * reg * model.bu[u])
    np.add.at(g_bi, i, -2 * err + 2 * reg * model.bi[i])
    np.add.at(g_Q, i, -2 * err[:, None] * z[u] + 2 * reg * model.Q[i])
    np.add.at(g_P, u, -2 * err[:, None] * model.Q[i] + 2 * reg * model.P[u])
    for s in range(len(u)):
        lo, hi = model.comm_ptr[u[s]], model.comm_ptr[u[s] + 1]
        for p in range(lo, hi):
            c = model.comm_idx[p]
            g_Pc[c] += -2 * err[s] * model.comm_alpha[p] * model.Q[i[s]] + 2 * reg * model.Pc[c]
    return {"bu": g_bu, "bi": g_bi, "Q": g_Q, "P": g_P, "Pc": g_Pc}


def fit_consvd(
    train: RatingsTable,
    cover: Cover | None,
    alpha: dict | None,
    cfg: TrainConfig = TrainConfig(),
    graph: Graph | None = None,
) -> ConSVDModel:
    """SGD over seeded shuffles with mu fixed at the training mean.

    With ``cfg.adaptive`` an epoch that raises the objective is undone and
    retried at half the learning rate, so the recorded objective never
    increases. An empty or missing cover gives plain biased SVD.
    """
    if len(train) == 0:
        raise ValidationError("empty training set")
    model = init_model(train, cover, alpha, cfg, graph)
    rng = np.random.default_rng([cfg.seed, 1])
    lr = cfg.learning_rate
    reg = cfg.reg_lambda
    history = [objective(model, train, reg)]
    halvings = 0
    epoch = 0
    while epoch < cfg.epochs:
        order = rng.permutation(len(train)).astype(np.int64)
        snapshot = model.copy() if cfg.adaptive else None
        sgd_epoch(
            train.users, train.items, train.values, order, model.mu, model.bu, model.bi, model.P, model.Q,
            model.Pc, model.comm_ptr, model.comm_idx, model.comm_alpha, lr, reg,
        )
        loss = objective(model, train, reg)
        if cfg.adaptive and not (loss <= history[-1]) and halvings < cfg.max_halvings:
            model = snapshot
            lr /= 2.0
            halvings += 1
            continue
        history.append(loss)
        epoch += 1
    model.meta.update({"objective": history, "final_learning_rate": lr, "halvings": halvings})
    return model


def predict_rating(model: ConSVDModel, user: str, item: str) -> float:
    """Model prediction; unknown users or items drop their terms."""
    u = model.user_index.get(str(user))
    i = model.item_index.get(str(item))
    pred = model.mu
    if u is not None:
        pred += model.bu[u]
    if i is not None:
        pred += model.bi[i]
    if u is not None and i is not None:
        z = model.P[u].copy()
        for p in range(model.comm_ptr[u], model.comm_ptr[u + 1]):
            z += model.comm_alpha[p] * model.Pc[model.comm_idx[p]]
        pred += float(model.Q[i] @ z)
    return float(pred)


def evaluate_ratings(model: ConSVDModel, test: RatingsTable) -> tuple[float, float]:
    """(RMSE, MAE) with predictions clamped to the rating scale."""
    if len(test) == 0:
        raise ValidationError("empty test set")
    if test.user_ids is model.user_ids and test.item_ids is model.item_ids:
        pred = model.predict_index(test.users, test.items)
    else:
        pred = np.array(
            [predict_rating(model, test.user_ids[u], test.item_ids[i]) for u, i in zip(test.users, test.items)]
        )
    return rmse_mae(np.clip(pred, RATING_MIN, RATING_MAX), test.values)


def kfold_split(ratings: RatingsTable, k: int, seed: int = 0) -> list[tuple[RatingsTable, RatingsTable]]:
    if k < 2:
        raise ValidationError("k must be >= 2")
    if len(ratings) < k:
        raise ValidationError("fewer ratings than folds")
    perm = np.random.default_rng(seed).permutation(len(ratings))
    folds = np.array_split(perm, k)
    out = []
    for f in range(k):
        test = np.sort(folds[f])
        train = np.sort(np.concatenate([folds[g] for g in range(k) if g != f]))
        out.append((ratings.subset(train), ratings.subset(test)))
    return out


def save_model(model: ConSVDModel, path) -> None:
    meta = {
        "version": CHECKPOINT_VERSION,
        "mu": model.mu,
        "cfg": asdict(model.cfg),
        "meta": model.meta,
        "user_ids": list(model.user_ids),
        "item_ids": list(model.item_ids),
    }
    with open(path, "wb") as fh:
        np.savez(
            fh, bu=model.bu, bi=model.bi, P=model.P, Q=model.Q, Pc=model.Pc, comm_ptr=model.comm_ptr,
            comm_idx=model.comm_idx, comm_alpha=model.comm_alpha, meta=np.array(json.dumps(meta)),
        )


def load_model(path) -> ConSVDModel:
    with np.load(path, allow_pickle=False) as z:
        meta = json.loads(str(z["meta"]))
        if meta.get("version") != CHECKPOINT_VERSION:
            raise ValidationError(f"unsupported checkpoint version {meta.get('version')}")
        return ConSVDModel(
            mu=meta["mu"], bu=z["bu"], bi=z["bi"], P=z["P"], Q=z["Q"], Pc=z["Pc"], comm_ptr=z["comm_ptr"],
            comm_idx=z["comm_idx"], comm_alpha=z["comm_alpha"], user_ids=tuple(meta["user_ids"]),
            item_ids=tuple(meta["item_ids"]), cfg=TrainConfig(**meta["cfg"]), meta=meta["meta"],
        )

"""Shared synthetic graphs and trained-model fixtures.

No benchmark downloads happen here.  Tests that need a real dataset read it
from $HDKG_DATA_ROOT/<name>/{train,valid,test}.txt and skip with an explicit
message when that root is absent.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import pytest

from hdkg import rng
from hdkg.kg import KnowledgeGraph
from hdkg.model import ModelState, OptimizerConfig, TrainConfig, Trainer

DATA_ROOT_ENV = "HDKG_DATA_ROOT"

# One line per release acceptance check, echoed after the test summary so the
# verdicts are visible even though passing tests' output is captured.
VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if VERDICTS:
        terminalreporter.section("acceptance verdicts")
        for line in VERDICTS:
            terminalreporter.write_line(line)


def real_dataset_dir(name: str) -> Path:
    """Directory of a real benchmark dataset, or skip the calling test."""
    root = os.environ.get(DATA_ROOT_ENV)
    if not root:
        pytest.skip(f"set ${DATA_ROOT_ENV} to a directory containing "
                    f"{name}/train.txt to run this test")
    path = Path(root) / name
    if not (path / "train.txt").exists():
        pytest.skip(f"${DATA_ROOT_ENV} is set but {path}/train.txt is missing")
    return path


def graph_from_triples(triples, n_entities, n_relations,
                       n_valid=0, n_test=0) -> KnowledgeGraph:
    """Wrap an id-triple list; the last n_valid + n_test rows become holdouts."""
    arr = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    n_train = len(arr) - n_valid - n_test
    return KnowledgeGraph(
        entities=[f"v{i}" for i in range(n_entities)],
        relations=[f"r{i}" for i in range(n_relations)],
        train=arr[:n_train],
        valid=arr[n_train:n_train + n_valid],
        test=arr[n_train + n_valid:],
    )


def make_graph(n_entities, n_relations, n_edges, seed=0, skew=0.0,
               max_out=None, n_valid=0, n_test=0,
               allow_dup=False) -> KnowledgeGraph:
    """Random multigraph with optional hub skew and out-degree cap.

    With ``skew`` > 0 tail vertices are drawn with probability proportional
    to (1 + id)^-skew, which concentrates traffic on low-id hubs the way
    real knowledge graphs concentrate it on popular entities.
    """
    gen = rng.stream(seed, "synthetic")
    weights = (1.0 + np.arange(n_entities)) ** -skew
    weights /= weights.sum()
    triples = []
    seen = set()
    out_count = np.zeros(n_entities, dtype=np.int64)
    attempts = 0
    while len(triples) < n_edges:
        attempts += 1
        if attempts > 50 * n_edges:
            raise RuntimeError("graph generator failed to place enough edges")
        h = int(gen.integers(n_entities))
        t = int(gen.choice(n_entities, p=weights))
        r = int(gen.integers(n_relations))
        if h == t:
            continue
        if max_out is not None and out_count[h] >= max_out:
            continue
        if not allow_dup and (h, r, t) in seen:
            continue
        seen.add((h, r, t))
        out_count[h] += 1
        triples.append((h, r, t))
    return graph_from_triples(triples, n_entities, n_relations,
                              n_valid=n_valid, n_test=n_test)


def skewed_degrees(n_vertices, n_edges, seed=0, alpha=0.85) -> np.ndarray:
    """Integer degree sequence with a power-law profile summing to n_edges."""
    gen = rng.stream(seed, "synthetic")
    weights = (1.0 + np.arange(n_vertices)) ** -alpha
    weights /= weights.sum()
    degrees = np.floor(weights * n_edges).astype(np.int64)
    short = n_edges - int(degrees.sum())
    if short > 0:
        extra = gen.choice(n_vertices, size=short, p=weights)
        np.add.at(degrees, extra, 1)
    perm = gen.permutation(n_vertices)
    return degrees[perm]


def neighbors_from_degrees(degrees, n_relations, seed=0, skew=0.85):
    """Deterministic neighbors_of callable matching a degree sequence.

    Tail ids are drawn once per vertex from a hub-skewed distribution, so
    replaying the same schedule touches the same vertices every time.
    """
    n = len(degrees)
    gen = rng.stream(seed, "synthetic")
    weights = (1.0 + np.arange(n)) ** -skew
    cdf = np.cumsum(weights / weights.sum())
    total = int(np.sum(degrees))
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(degrees, out=indptr[1:])
    tails_all = np.searchsorted(cdf, gen.random(total)).astype(np.int64)
    rels_all = gen.integers(0, n_relations, size=total).astype(np.int64)

    def neighbors_of(i):
        return tails_all[indptr[i]:indptr[i + 1]], rels_all[indptr[i]:indptr[i + 1]]

    return neighbors_of


def planted_graph(n_entities, n_relations, out_per_pair=2, k=6, seed=0,
                  n_test=0) -> KnowledgeGraph:
    """Graph with recoverable structure: edges follow hidden translations.

    Each entity and relation gets a hidden k-dim vector; (h, r) connects to
    the out_per_pair nearest tails under ||e_h + e_r - e_t||.  A model that
    learns anything useful generalizes to held-out edges of such a graph,
    unlike edges sampled independently at random.
    """
    gen = rng.stream(seed, "synthetic")
    ev = gen.normal(size=(n_entities, k))
    er = gen.normal(size=(n_relations, k))
    triples = []
    for h in range(n_entities):
        for r in range(n_relations):
            dist = np.linalg.norm(ev[h] + er[r] - ev, axis=1)
            dist[h] = np.inf  # no self loops
            for t in np.argsort(dist)[:out_per_pair]:
                triples.append((h, r, int(t)))
    order = gen.permutation(len(triples))
    triples = [triples[i] for i in order]
    return graph_from_triples(triples, n_entities, n_relations, n_test=n_test)


def _train(kg, mode, lr, epochs, seed, d=16, D=256):
    state = ModelState.create(kg.n_entities, kg.n_relations, d=d, D=D, seed=seed)
    cfg = TrainConfig(batch_size=128, chunk_T=32, mode=mode,
                      label_smoothing=0.1,
                      optimizer=OptimizerConfig(lr=lr, adaptive=True))
    trainer = Trainer(state, kg, cfg, seed=seed)
    for _ in range(epochs):
        trainer.train_epoch()
    if not state.mv_fresh:
        state.refresh(kg)
    return state


@pytest.fixture(scope="session")
def trained_setup():
    """A model trained on a planted-structure graph until it generalizes.

    Train MRR lands near 0.37 and held-out MRR near 0.33, both far above
    chance.  Session-scoped because ranking and robustness tests reuse it.
    """
    kg = planted_graph(60, 4, out_per_pair=2, k=6, seed=11, n_test=40)
    state = _train(kg, "reference", lr=0.1, epochs=150, seed=11)
    return {"kg": kg, "state": state, "seed": 11}


@pytest.fixture(scope="session")
def hardware_setup(trained_setup):
    """The same graph trained in hardware mode.

    Gradients skip the activation derivative, so the solution sits in the
    saturated regime: near-binary hypervectors and integer-like memories.
    That regime tolerates coarse fixed-point grids far better than the
    small-magnitude solutions reference mode finds on toy graphs.
    """
    kg = trained_setup["kg"]
    state = _train(kg, "hardware", lr=0.5, epochs=80, seed=11)
    return {"kg": kg, "state": state, "seed": 11}

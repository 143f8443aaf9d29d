"""Triple files, vocabularies, reciprocal augmentation and label/filter indices."""

from __future__ import annotations

import csv
import hashlib
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SPLITS = ("train", "valid", "test")
INVERSE_SUFFIX = "_inv"
CACHE_MAGIC = b"KGD1"


class TripleParseError(ValueError):
    def __init__(self, path, lineno: int, msg: str):
        super().__init__(f"{path}:{lineno}: {msg}")
        self.path = path
        self.lineno = lineno


class CacheFormatError(ValueError):
    pass


class SynthConfigError(ValueError):
    pass


@dataclass
class Vocab:
    entity_names: list[str]
    relation_names: list[str]  # base names followed by their reciprocals
    num_base_relations: int

    def __post_init__(self):
        self.entity_index = {name: i for i, name in enumerate(self.entity_names)}
        self.relation_index = {name: i for i, name in enumerate(self.relation_names)}
        if len(self.entity_index) != len(self.entity_names):
            raise ValueError("duplicate entity names")
        if len(self.relation_index) != len(self.relation_names):
            raise ValueError("duplicate relation names (a base relation may already end in '_inv')")

    @property
    def num_entities(self) -> int:
        return len(self.entity_names)

    @property
    def num_relations(self) -> int:
        return len(self.relation_names)

    def inverse(self, rel_id: int) -> int:
        nb = self.num_base_relations
        return rel_id + nb if rel_id < nb else rel_id - nb

    def digest(self) -> str:
        h = hashlib.sha256()
        for names in (self.entity_names, self.relation_names):
            h.update(struct.pack("<I", len(names)))
            for name in names:
                raw = name.encode("utf-8")
                h.update(struct.pack("<I", len(raw)) + raw)
        return h.hexdigest()


@dataclass
class TripleStore:
    """Integer triples per split, each already closed under reciprocals.

    ``base`` keeps the pre-augmentation triples (what the files contained).
    """

    vocab: Vocab
    base: dict[str, np.ndarray]
    splits: dict[str, np.ndarray] = field(init=False)
    kvsall_index: dict[tuple[int, int], frozenset[int]] = field(init=False)
    filter_index: dict[tuple[int, int], frozenset[int]] = field(init=False)

    def __post_init__(self):
        nb = self.vocab.num_base_relations
        self.splits = {}
        for name in SPLITS:
            t = np.asarray(self.base.get(name, np.zeros((0, 3))), dtype=np.int64).reshape(-1, 3)
            self.base[name] = t
            inv = np.stack([t[:, 2], t[:, 1] + nb, t[:, 0]], axis=1)
            self.splits[name] = np.concatenate([t, inv], axis=0)
        ne, nr = self.vocab.num_entities, self.vocab.num_relations
        for name, t in self.splits.items():
            if t.size and (t[:, [0, 2]].max() >= ne or t[:, 1].max() >= nr or t.min() < 0):
                raise ValueError(f"{name} split has ids outside the vocabulary")
        self.kvsall_index = _group_tails(self.splits["train"])
        self.filter_index = _group_tails(np.concatenate([self.splits[s] for s in SPLITS]))

    @property
    def num_entities(self) -> int:
        return self.vocab.num_entities

    @property
    def num_relations(self) -> int:
        return self.vocab.num_relations

    def kvsall_targets(self, head_id: int, rel_id: int) -> frozenset[int]:
        return self.kvsall_index.get((int(head_id), int(rel_id)), frozenset())

    def filter_candidates(self, head_id: int, rel_id: int, gold_tail_id: int) -> set[int]:
        return set(self.filter_index.get((int(head_id), int(rel_id)), ())) - {int(gold_tail_id)}

    def training_pairs(self) -> np.ndarray:
        """Distinct (head, rel) rows of the training split in first-occurrence order."""
        return np.array(list(self.kvsall_index), dtype=np.int64).reshape(-1, 2)

    def stats(self) -> dict[str, int]:
        return {
            "entities": self.vocab.num_entities,
            "relations": self.vocab.num_base_relations,
            **{s: len(self.base[s]) for s in SPLITS},
        }


def _group_tails(triples: np.ndarray) -> dict[tuple[int, int], frozenset[int]]:
    groups: dict[tuple[int, int], set[int]] = {}
    for h, r, t in triples.tolist():
        groups.setdefault((h, r), set()).add(t)
    return {k: frozenset(v) for k, v in groups.items()}


def read_triples(path) -> list[tuple[str, str, str]]:
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise TripleParseError(path, lineno, f"expected 3 tab-separated fields, got {len(fields)}")
            out.append((fields[0], fields[1], fields[2]))
    return out


def build_store(named: dict[str, list[tuple[str, str, str]]]) -> TripleStore:
    entities: dict[str, int] = {}
    relations: dict[str, int] = {}
    for split in SPLITS:
        for h, r, t in named.get(split, []):
            entities.setdefault(h, len(entities))
            relations.setdefault(r, len(relations))
            entities.setdefault(t, len(entities))
    base_rel = list(relations)
    vocab = Vocab(list(entities), base_rel + [r + INVERSE_SUFFIX for r in base_rel], len(base_rel))
    base = {
        split: np.array(
            [(entities[h], relations[r], entities[t]) for h, r, t in named.get(split, [])], dtype=np.int64
        ).reshape(-1, 3)
        for split in SPLITS
    }
    return TripleStore(vocab, base)


def load_splits(train_path, valid_path, test_path) -> TripleStore:
    """Read three TSV files; ids follow first occurrence over train, valid, test."""
    paths = dict(zip(SPLITS, (train_path, valid_path, test_path)))
    return build_store({split: read_triples(p) for split, p in paths.items()})


def split_paths(directory) -> tuple[Path, Path, Path]:
    d = Path(directory)
    found = []
    for split in SPLITS:
        for cand in (f"{split}.txt", f"{split}.tsv", split):
            if (d / cand).is_file():
                found.append(d / cand)
                break
        else:
            raise FileNotFoundError(f"no {split}.txt in {d}")
    return tuple(found)


def load_data(path) -> TripleStore:
    """Load either a KGD1 cache file or a directory of train/valid/test TSVs."""
    p = Path(path)
    if p.is_dir():
        return load_splits(*split_paths(p))
    return load_cache(p)


# --- binary cache -----------------------------------------------------------

def _pack_name(name: str) -> bytes:
    raw = name.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


def save_cache(store: TripleStore, path) -> None:
    v = store.vocab
    base_names = v.relation_names[: v.num_base_relations]
    parts = [
        CACHE_MAGIC,
        struct.pack("<5I", v.num_entities, v.num_base_relations, *(len(store.base[s]) for s in SPLITS)),
    ]
    parts += [_pack_name(n) for n in v.entity_names]
    parts += [_pack_name(n) for n in base_names]
    parts += [store.base[s].astype("<u4").tobytes() for s in SPLITS]
    with open(path, "wb") as f:
        f.write(b"".join(parts))


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise CacheFormatError(f"truncated file: wanted {n} bytes at offset {self.pos}")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self, count: int = 1):
        vals = struct.unpack(f"<{count}I", self.take(4 * count))
        return vals[0] if count == 1 else vals

    def name(self) -> str:
        return self.take(self.u32()).decode("utf-8")


def load_cache(path) -> TripleStore:
    with open(path, "rb") as f:
        r = _Reader(f.read())
    if r.take(4) != CACHE_MAGIC:
        raise CacheFormatError(f"{path} is not a KGD1 cache")
    ne, nb, *counts = r.u32(5)
    entities = [r.name() for _ in range(ne)]
    rels = [r.name() for _ in range(nb)]
    base = {}
    for split, n in zip(SPLITS, counts):
        base[split] = np.frombuffer(r.take(12 * n), dtype="<u4").reshape(n, 3).astype(np.int64)
    if r.pos != len(r.buf):
        raise CacheFormatError(f"{len(r.buf) - r.pos} trailing bytes in {path}")
    return TripleStore(Vocab(entities, rels + [x + INVERSE_SUFFIX for x in rels], nb), base)


# --- synthetic multi-semantics graph -----------------------------------------

@dataclass
class SynthSpec:
    """One relation whose heads fall into ``clusters`` groups of ``per_cluster`` entities.

    Group i links to every entity of group (i + 1) mod k, so the relation is a
    cycle over groups: no single translation vector fits all groups at once,
    while a per-group translation does.
    """

    clusters: int = 3
    per_cluster: int = 50
    dimension_hint: int = 32
    noise_rate: float = 0.0
    seed: int = 0
    max_entities: int | None = None

    def validate(self) -> None:
        if self.clusters < 2:
            raise SynthConfigError("clusters must be >= 2")
        if self.per_cluster < 2:
            raise SynthConfigError("per_cluster must be >= 2")
        if not 0.0 <= self.noise_rate < 0.5:
            raise SynthConfigError("noise_rate must lie in [0, 0.5)")
        if self.max_entities is not None and self.clusters * self.per_cluster > self.max_entities:
            raise SynthConfigError(
                f"{self.clusters} x {self.per_cluster} entities exceeds the budget of {self.max_entities}"
            )


SYNTH_RELATION = "rel_multi"


def generate_synthetic(spec: SynthSpec, out_dir) -> Path:
    """Write train/valid/test TSVs plus ``clusters.csv`` and ``noise.csv`` into ``out_dir``."""
    spec.validate()
    k, m = spec.clusters, spec.per_cluster
    rng = np.random.default_rng(spec.seed)
    names = [f"c{i}_e{j:03d}" for i in range(k) for j in range(m)]
    triples = []
    for i in range(k):
        tails = range(((i + 1) % k) * m, ((i + 1) % k + 1) * m)
        triples += [(i * m + j, t) for j in range(m) for t in tails]
    pairs = np.array(triples, dtype=np.int64)
    noise = np.zeros(len(pairs), dtype=bool)
    n_noise = int(round(spec.noise_rate * len(pairs)))
    if n_noise:
        existing = set(map(tuple, pairs.tolist()))
        for idx in rng.choice(len(pairs), size=n_noise, replace=False):
            h, t_old = pairs[idx]
            for _ in range(100):
                t_new = int(rng.integers(len(names)))
                if t_new != t_old and (h, t_new) not in existing:
                    break
            existing.discard((int(h), int(t_old)))
            existing.add((int(h), t_new))
            pairs[idx, 1] = t_new
            noise[idx] = True
    order = rng.permutation(len(pairs))
    n_train = int(round(0.8 * len(pairs)))
    n_valid = int(round(0.1 * len(pairs)))
    chunks = {
        "train": order[:n_train],
        "valid": order[n_train : n_train + n_valid],
        "test": order[n_train + n_valid :],
    }
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for split, idx in chunks.items():
        with open(out / f"{split}.txt", "w", encoding="utf-8", newline="\n") as f:
            for h, t in pairs[idx].tolist():
                f.write(f"{names[h]}\t{SYNTH_RELATION}\t{names[t]}\n")
    with open(out / "clusters.csv", "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["entity", "cluster"])
        w.writerows((name, i // m) for i, name in enumerate(names))
    with open(out / "noise.csv", "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["head", "relation", "tail", "noise"])
        for (h, t), flag in zip(pairs.tolist(), noise.tolist()):
            w.writerow([names[h], SYNTH_RELATION, names[t], int(flag)])
    return out


def read_clusters(path) -> dict[str, int]:
    with open(path, encoding="utf-8", newline="") as f:
        return {row["entity"]: int(row["cluster"]) for row in csv.DictReader(f)}


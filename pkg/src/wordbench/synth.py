"""Synthetic bilingual task generator.

Builds a small two-language classification task with known ground truth:
two planted semantic groups sit in antipodal regions of the embedding
space, source-language vectors cluster by group, and target-language
vectors are translations of source vectors plus noise.  A configurable
fraction of translations is deliberately corrupted by relocating the
target vector into the wrong group's region, which is exactly the kind
of alignment damage neighbor feedback can repair.

Documents are bags of content tokens (majority group decides the label)
plus a fixed set of function words that appear in every document and so
carry zero idf weight.  Outputs: two word2vec text files, three JSONL
corpora (labeled source train, labeled target test, target pool whose
labels serve as the oracle's ground truth), a lexicon JSON mapping each
content word to its planted group, and a config echo.

Everything is deterministic given the spec: independent RNG streams for
embeddings, corruption, and corpora mean the corpora do not change when
only the corruption rate does.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, PreconditionError

LEXICON_FORMAT_VERSION = 1
TASK_FORMAT_VERSION = 1
_VEC_PRECISION = 6


@dataclass(frozen=True)
class SyntheticTaskSpec:
    src_lang: str = "src"
    tgt_lang: str = "tgt"
    dim: int = 16
    src_words_per_group: int = 30
    tgt_words_per_group: int = 15
    function_words: int = 4
    center_norm: float = 0.04
    cluster_noise: float = 0.0075
    translation_noise: float = 0.0025
    corruption: float = 0.0
    n_train: int = 120
    n_test: int = 80
    n_unlabeled: int = 160
    content_tokens: int = 8
    minority_cap: int = 3
    seed: int = 0

    def validate(self) -> None:
        if not 0.0 <= self.corruption <= 1.0:
            raise PreconditionError("corruption rate must lie in [0, 1]")
        if self.src_lang == self.tgt_lang:
            raise PreconditionError("languages must differ")
        if self.dim < 2:
            raise PreconditionError("dim must be >= 2")
        if self.tgt_words_per_group > self.src_words_per_group:
            raise PreconditionError(
                "target vocabulary cannot exceed the translated source words"
            )
        for name in (
            "src_words_per_group",
            "tgt_words_per_group",
            "function_words",
            "n_train",
            "n_test",
            "n_unlabeled",
            "content_tokens",
        ):
            if getattr(self, name) < 1:
                raise PreconditionError(f"{name} must be positive")
        # Strict majority must survive the worst minority draw.
        if self.minority_cap < 0 or 2 * self.minority_cap >= self.content_tokens:
            raise PreconditionError("minority_cap must stay below half the content tokens")
        if self.center_norm <= 0 or self.cluster_noise <= 0 or self.translation_noise <= 0:
            raise PreconditionError("scales must be positive")


@dataclass(frozen=True)
class TaskPaths:
    src_emb: Path
    tgt_emb: Path
    train: Path
    test: Path
    unlabeled: Path
    lexicon: Path
    task: Path


class OracleLexicon:
    """Ground truth for the synthetic annotator: word -> planted group.

    Covers every content word of both languages; function words are
    deliberately absent, so the oracle leaves them unmarked.
    """

    def __init__(self, groups: dict[str, dict[str, int]], translations: dict[str, str]):
        self.groups = groups
        self.translations = translations

    def group_of(self, surface: str, lang: str) -> int | None:
        return self.groups.get(lang, {}).get(surface)

    @classmethod
    def load(cls, path: str | Path) -> "OracleLexicon":
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        if data.get("format_version") != LEXICON_FORMAT_VERSION:
            raise FormatError(f"unsupported lexicon format in {path}")
        return cls(groups=data["groups"], translations=data["translations"])


def content_surface(lang: str, group: int, i: int) -> str:
    return f"{lang}{group}w{i:02d}"


def function_surface(lang: str, i: int) -> str:
    return f"{lang}fw{i}"


def _write_vec(path: Path, surfaces: list[str], matrix: np.ndarray) -> None:
    fmt = f"%.{_VEC_PRECISION}f"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(surfaces)} {matrix.shape[1]}\n")
        for surface, row in zip(surfaces, matrix):
            fh.write(surface + " " + " ".join(fmt % x for x in row) + "\n")


def _corpus_docs(spec, rng, lang, prefix, count, words_by_group, function_list):
    docs = []
    for i in range(count):
        label = i % 2
        k_other = int(rng.integers(0, spec.minority_cap + 1))
        n_own = spec.content_tokens - k_other
        own = words_by_group[label]
        other = words_by_group[1 - label]
        tokens = [own[int(j)] for j in rng.integers(0, len(own), size=n_own)]
        tokens += [other[int(j)] for j in rng.integers(0, len(other), size=k_other)]
        tokens += list(function_list)
        order = rng.permutation(len(tokens))
        text = " ".join(tokens[int(j)] for j in order)
        docs.append(
            {"id": f"{prefix}-{i:04d}", "lang": lang, "text": text, "label": label}
        )
    return docs


def _write_jsonl(path: Path, docs: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(doc) + "\n")


def generate_task(spec: SyntheticTaskSpec, out_dir: str | Path) -> TaskPaths:
    """Write all fixture files under `out_dir`; byte-deterministic per task config."""
    spec.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    rng_emb = np.random.default_rng([spec.seed, 0])
    rng_corrupt = np.random.default_rng([spec.seed, 1])
    rng_corpus = np.random.default_rng([spec.seed, 2])

    d = spec.dim
    axis = rng_emb.normal(size=d)
    axis /= np.linalg.norm(axis)
    centers = {0: -spec.center_norm * axis, 1: spec.center_norm * axis}

    # Source vectors: group clusters, then function words near the origin.
    src_surfaces: list[str] = []
    src_rows: list[np.ndarray] = []
    src_vec_by_key: dict[tuple[int, int], np.ndarray] = {}
    for group in (0, 1):
        noise = rng_emb.normal(size=(spec.src_words_per_group, d)) * spec.cluster_noise
        for i in range(spec.src_words_per_group):
            vec = centers[group] + noise[i]
            src_surfaces.append(content_surface(spec.src_lang, group, i))
            src_rows.append(vec)
            src_vec_by_key[(group, i)] = vec
    src_fn = rng_emb.normal(size=(spec.function_words, d)) * spec.cluster_noise
    for i in range(spec.function_words):
        src_surfaces.append(function_surface(spec.src_lang, i))
        src_rows.append(src_fn[i])

    # Translation noise is drawn for every pair up front so that clean
    # target rows are identical across corruption rates at a fixed seed.
    trans_noise = {
        group: rng_emb.normal(size=(spec.tgt_words_per_group, d)) * spec.translation_noise
        for group in (0, 1)
    }
    tgt_fn = rng_emb.normal(size=(spec.function_words, d)) * spec.cluster_noise

    n_corrupt = int(round(spec.corruption * spec.tgt_words_per_group))
    corrupted: dict[int, set[int]] = {}
    relocation = {}
    for group in (0, 1):
        perm = rng_corrupt.permutation(spec.tgt_words_per_group)
        corrupted[group] = set(int(j) for j in perm[:n_corrupt])
        relocation[group] = rng_corrupt.normal(size=(spec.tgt_words_per_group, d)) * spec.cluster_noise

    tgt_surfaces: list[str] = []
    tgt_rows: list[np.ndarray] = []
    for group in (0, 1):
        for i in range(spec.tgt_words_per_group):
            if i in corrupted[group]:
                vec = centers[1 - group] + relocation[group][i]
            else:
                vec = src_vec_by_key[(group, i)] + trans_noise[group][i]
            tgt_surfaces.append(content_surface(spec.tgt_lang, group, i))
            tgt_rows.append(vec)
    for i in range(spec.function_words):
        tgt_surfaces.append(function_surface(spec.tgt_lang, i))
        tgt_rows.append(tgt_fn[i])

    paths = TaskPaths(
        src_emb=out / "src.vec",
        tgt_emb=out / "tgt.vec",
        train=out / "train.jsonl",
        test=out / "test.jsonl",
        unlabeled=out / "unlabeled.jsonl",
        lexicon=out / "lexicon.json",
        task=out / "task.json",
    )
    _write_vec(paths.src_emb, src_surfaces, np.array(src_rows))
    _write_vec(paths.tgt_emb, tgt_surfaces, np.array(tgt_rows))

    src_groups = {
        0: [content_surface(spec.src_lang, 0, i) for i in range(spec.src_words_per_group)],
        1: [content_surface(spec.src_lang, 1, i) for i in range(spec.src_words_per_group)],
    }
    tgt_groups = {
        0: [content_surface(spec.tgt_lang, 0, i) for i in range(spec.tgt_words_per_group)],
        1: [content_surface(spec.tgt_lang, 1, i) for i in range(spec.tgt_words_per_group)],
    }
    src_fn_list = [function_surface(spec.src_lang, i) for i in range(spec.function_words)]
    tgt_fn_list = [function_surface(spec.tgt_lang, i) for i in range(spec.function_words)]

    _write_jsonl(
        paths.train,
        _corpus_docs(spec, rng_corpus, spec.src_lang, "train", spec.n_train, src_groups, src_fn_list),
    )
    _write_jsonl(
        paths.test,
        _corpus_docs(spec, rng_corpus, spec.tgt_lang, "test", spec.n_test, tgt_groups, tgt_fn_list),
    )
    # Pool labels are ground truth for the oracle; the pipeline treats the
    # pool as unlabeled until a document is selected and "annotated".
    _write_jsonl(
        paths.unlabeled,
        _corpus_docs(spec, rng_corpus, spec.tgt_lang, "pool", spec.n_unlabeled, tgt_groups, tgt_fn_list),
    )

    groups_json = {
        spec.src_lang: {w: g for g in (0, 1) for w in src_groups[g]},
        spec.tgt_lang: {w: g for g in (0, 1) for w in tgt_groups[g]},
    }
    translations = {
        content_surface(spec.src_lang, g, i): content_surface(spec.tgt_lang, g, i)
        for g in (0, 1)
        for i in range(spec.tgt_words_per_group)
    }
    with open(paths.lexicon, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "format_version": LEXICON_FORMAT_VERSION,
                "groups": groups_json,
                "translations": translations,
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")

    with open(paths.task, "w", encoding="utf-8") as fh:
        json.dump(
            {"format_version": TASK_FORMAT_VERSION, "spec": asdict(spec)},
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    return paths

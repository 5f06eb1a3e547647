"""Shared fixtures: synthetic tasks and trained workspaces.

The heavyweight fixtures are session-scoped and read-only; tests that
mutate a workspace (finalize, install) take a private copy.
"""

import shutil

import pytest

from wordbench.synth import SyntheticTaskSpec, generate_task
from wordbench.workspace import Workspace

# The misaligned task every end-to-end check runs on: 60% of the target
# language's task words sit near the wrong group centroid, so the stock
# classifier transfers poorly until the embeddings are repaired.
CORRUPTED_SPEC = SyntheticTaskSpec(corruption=0.6, seed=7)
CLEAN_SPEC = SyntheticTaskSpec(corruption=0.0, seed=7)


def make_workspace(spec: SyntheticTaskSpec, root) -> Workspace:
    paths = generate_task(spec, root / "task")
    ws = Workspace.create(
        root / "ws",
        src_emb=paths.src_emb,
        tgt_emb=paths.tgt_emb,
        src_lang=spec.src_lang,
        tgt_lang=spec.tgt_lang,
        train=paths.train,
        test=paths.test,
        unlabeled=paths.unlabeled,
        lexicon=paths.lexicon,
    )
    ws.train_classifier(seed=0)
    return ws


@pytest.fixture(scope="session")
def corrupted_workspace(tmp_path_factory) -> Workspace:
    """Trained workspace on the corrupted task; treat as read-only."""
    return make_workspace(CORRUPTED_SPEC, tmp_path_factory.mktemp("corrupted"))


@pytest.fixture(scope="session")
def clean_workspace(tmp_path_factory) -> Workspace:
    """Trained workspace on the well-aligned task; treat as read-only."""
    return make_workspace(CLEAN_SPEC, tmp_path_factory.mktemp("clean"))


@pytest.fixture
def corrupted_copy(corrupted_workspace, tmp_path) -> Workspace:
    """Private mutable copy of the corrupted workspace."""
    dest = tmp_path / "ws"
    shutil.copytree(corrupted_workspace.root, dest)
    return Workspace.load(dest)

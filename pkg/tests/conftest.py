import os
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fairbook.dataset import Dataset

# The real Book-Crossing ratings file is not redistributable with the repo.
# Tests that check the reference dataset statistics look for it here and skip
# otherwise; everything structural runs on synthetic data regardless.
BX_ENV_VAR = "FAIRBOOK_BX_RATINGS"
BX_DEFAULT = Path(__file__).resolve().parents[1] / "data" / "BX-Book-Ratings.csv"


def bx_ratings_path():
    path = Path(os.environ.get(BX_ENV_VAR, BX_DEFAULT))
    return path if path.exists() else None


requires_bx = pytest.mark.skipif(
    bx_ratings_path() is None,
    reason=f"real BX-Book-Ratings.csv not found (set {BX_ENV_VAR} or place it under data/)",
)


def make_dataset(users, items, ratings, n_users=None, n_items=None):
    """Build a Dataset directly from parallel index lists (bypasses filtering)."""
    users = np.asarray(users, dtype=np.int64)
    items = np.asarray(items, dtype=np.int64)
    ratings = np.asarray(ratings, dtype=np.int64)
    n_users = int(users.max()) + 1 if n_users is None else n_users
    n_items = int(items.max()) + 1 if n_items is None else n_items
    return Dataset(
        n_users=n_users,
        n_items=n_items,
        users=users,
        items=items,
        ratings=ratings,
        user_ids=tuple(f"u{k}" for k in range(n_users)),
        item_ids=tuple(f"b{k}" for k in range(n_items)),
    )


@pytest.fixture(scope="session")
def bx_like():
    """Synthetic corpus with the qualitative structure of the real book data."""
    from synthetic import generate_bx_like

    return generate_bx_like(seed=7)

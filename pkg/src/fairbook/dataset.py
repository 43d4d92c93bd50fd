"""Ingest of the raw Book-Crossing ratings file into a canonical dataset.

The raw file (``BX-Book-Ratings.csv``) is Latin-1 text, semicolon separated,
with every field wrapped in double quotes and one header line
``"User-ID";"ISBN";"Book-Rating"``.  Ratings are integers in [0, 10] where 0
encodes an implicit interaction (a book that was viewed but not rated).

The canonical dataset is produced by four filter steps, each applied exactly
once and in this order:

1. drop rows with rating 0 (implicit interactions),
2. deduplicate (user, isbn) pairs keeping the last occurrence in file order,
3. drop users with fewer than 5 remaining ratings,
4. drop items with fewer than 5 remaining readers,

followed by dense index assignment in order of first appearance in the
filtered data.  Every step reports how many rows it removed, so any
divergence from reference counts can be localised per step.

Note that because each filter runs once (no iterated k-core), the item filter
can in principle push a few users back below 5 ratings; the provenance
summary records the final minimum profile sizes for auditability.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from fairbook.errors import IngestError
from fairbook.manifest import atomic_write_text

logger = logging.getLogger(__name__)

RATINGS_HEADER = '"User-ID";"ISBN";"Book-Rating"'
MIN_USER_RATINGS = 5
MIN_ITEM_READERS = 5
MALFORMED_WARN_FRACTION = 0.01


class RawRating(NamedTuple):
    """One parsed line of the raw ratings file."""

    user_id: str
    isbn: str
    rating: int


@dataclass(frozen=True)
class ParseResult:
    """Parsed rows plus the bookkeeping needed for the accounting invariant."""

    records: list[RawRating]
    data_lines: int  # lines after the header, malformed included
    malformed: int


@dataclass(frozen=True)
class ProvenanceSummary:
    """Row counts dropped at each preprocessing step.

    ``n_input + 0 == dropped_implicit + dropped_duplicate + dropped_user_filter
    + dropped_item_filter + kept`` always holds; adding ``malformed`` from the
    parse stage accounts for every raw line below the header.
    """

    n_input: int
    dropped_implicit: int
    dropped_duplicate: int
    dropped_user_filter: int
    dropped_item_filter: int
    kept: int
    min_user_profile_after: int
    min_item_readers_after: int

    def lines(self) -> list[str]:
        return [
            f"n_input = {self.n_input}",
            f"dropped_implicit = {self.dropped_implicit}",
            f"dropped_duplicate = {self.dropped_duplicate}",
            f"dropped_user_filter = {self.dropped_user_filter}",
            f"dropped_item_filter = {self.dropped_item_filter}",
            f"kept = {self.kept}",
            f"min_user_profile_after = {self.min_user_profile_after}",
            f"min_item_readers_after = {self.min_item_readers_after}",
        ]


@dataclass(frozen=True)
class Dataset:
    """Densely indexed explicit interactions after preprocessing.

    ``users``, ``items`` and ``ratings`` are parallel arrays, one entry per
    interaction, kept in file order of the surviving raw rows.  ``user_ids``
    and ``item_ids`` map dense index -> raw id.  Instances are treated as
    immutable; the arrays are marked read-only on construction.
    """

    n_users: int
    n_items: int
    users: np.ndarray
    items: np.ndarray
    ratings: np.ndarray
    user_ids: tuple[str, ...]
    item_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        for arr in (self.users, self.items, self.ratings):
            arr.setflags(write=False)

    @property
    def n_interactions(self) -> int:
        return int(self.users.shape[0])

    @cached_property
    def user_profiles(self) -> list[np.ndarray]:
        """Item indices per user, in interaction order."""
        profiles: list[list[int]] = [[] for _ in range(self.n_users)]
        for u, i in zip(self.users.tolist(), self.items.tolist()):
            profiles[u].append(i)
        return [np.asarray(p, dtype=np.int64) for p in profiles]

    @cached_property
    def user_id_map(self) -> dict[str, int]:
        return {raw: idx for idx, raw in enumerate(self.user_ids)}

    @cached_property
    def item_id_map(self) -> dict[str, int]:
        return {raw: idx for idx, raw in enumerate(self.item_ids)}

    def subset(self, rows: np.ndarray) -> "Dataset":
        """View onto a subset of interactions; dimensions and id maps are kept."""
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(
            n_users=self.n_users,
            n_items=self.n_items,
            users=self.users[rows].copy(),
            items=self.items[rows].copy(),
            ratings=self.ratings[rows].copy(),
            user_ids=self.user_ids,
            item_ids=self.item_ids,
        )

    def to_raw(self) -> list[RawRating]:
        """Interactions as raw rows (used by the idempotence check)."""
        return [
            RawRating(self.user_ids[u], self.item_ids[i], int(r))
            for u, i, r in zip(self.users, self.items, self.ratings)
        ]


@dataclass(frozen=True)
class DatasetStats:
    n_users: int
    n_items: int
    n_interactions: int
    interactions_per_user: float
    interactions_per_item: float
    sparsity: float


def parse_ratings_file(source: io.IOBase | bytes, strict: bool = False) -> ParseResult:
    """Parse the raw ratings file from a byte stream.

    The first line is skipped as the header.  A line is malformed when it
    does not split into exactly three fields or its rating is not an integer
    in [0, 10]; malformed lines are counted and skipped.  More than 1% of
    malformed lines raises a warning, escalated to :class:`IngestError` in
    strict mode.
    """
    if isinstance(source, bytes):
        source = io.BytesIO(source)
    try:
        text = io.TextIOWrapper(source, encoding="latin-1", newline="")
        lines = text.readlines()
    except (OSError, ValueError) as exc:
        raise IngestError(f"cannot read ratings stream: {exc}") from exc
    if not lines:
        raise IngestError("ratings stream is empty (missing header line)")

    records: list[RawRating] = []
    malformed = 0
    data_lines = 0
    for line in lines[1:]:
        line = line.rstrip("\r\n")
        if not line:
            continue
        data_lines += 1
        try:
            fields = next(csv.reader([line], delimiter=";", quotechar='"'))
        except csv.Error:
            malformed += 1
            continue
        if len(fields) != 3:
            malformed += 1
            continue
        user_id, isbn, rating_text = (f.strip() for f in fields)
        try:
            rating = int(rating_text)
        except ValueError:
            malformed += 1
            continue
        if not (0 <= rating <= 10) or not user_id or not isbn:
            malformed += 1
            continue
        records.append(RawRating(user_id, isbn, rating))

    if data_lines and malformed / data_lines > MALFORMED_WARN_FRACTION:
        message = (
            f"{malformed} of {data_lines} data lines are malformed "
            f"({malformed / data_lines:.2%} > {MALFORMED_WARN_FRACTION:.0%})"
        )
        if strict:
            raise IngestError(message)
        logger.warning(message)
    return ParseResult(records=records, data_lines=data_lines, malformed=malformed)


def parse_ratings_path(path: str | Path, strict: bool = False) -> ParseResult:
    path = Path(path)
    try:
        handle = path.open("rb")
    except OSError as exc:
        raise IngestError(f"cannot open ratings file {path}: {exc}") from exc
    with handle:
        return parse_ratings_file(handle, strict=strict)


def preprocess(raw: Sequence[RawRating]) -> tuple[Dataset, ProvenanceSummary]:
    """Apply the four filter steps and assign dense indices.

    Raises :class:`IngestError` with the per-step drop counts when nothing
    survives the filters.
    """
    if not raw:
        raise IngestError("no raw ratings to preprocess")
    n_input = len(raw)

    explicit = [row for row in raw if row.rating >= 1]
    dropped_implicit = n_input - len(explicit)

    # Keep the last occurrence of each (user, isbn) pair: later rows replace
    # earlier ones and the survivor keeps its own file position.
    last_by_pair: dict[tuple[str, str], int] = {}
    for pos, row in enumerate(explicit):
        last_by_pair[(row.user_id, row.isbn)] = pos
    kept_positions = sorted(last_by_pair.values())
    deduped = [explicit[pos] for pos in kept_positions]
    dropped_duplicate = len(explicit) - len(deduped)

    user_counts: dict[str, int] = {}
    for row in deduped:
        user_counts[row.user_id] = user_counts.get(row.user_id, 0) + 1
    after_users = [row for row in deduped if user_counts[row.user_id] >= MIN_USER_RATINGS]
    dropped_user_filter = len(deduped) - len(after_users)

    item_counts: dict[str, int] = {}
    for row in after_users:
        item_counts[row.isbn] = item_counts.get(row.isbn, 0) + 1
    after_items = [row for row in after_users if item_counts[row.isbn] >= MIN_ITEM_READERS]
    dropped_item_filter = len(after_users) - len(after_items)

    def _fail(step: str) -> IngestError:
        counts = (
            f"input={n_input} implicit={dropped_implicit} "
            f"duplicate={dropped_duplicate} user_filter={dropped_user_filter} "
            f"item_filter={dropped_item_filter}"
        )
        return IngestError(f"no interactions left after {step} ({counts})")

    if not after_items:
        if not explicit:
            raise _fail("implicit-rating removal")
        if not after_users:
            raise _fail("the user filter")
        raise _fail("the item filter")

    user_index: dict[str, int] = {}
    item_index: dict[str, int] = {}
    users = np.empty(len(after_items), dtype=np.int64)
    items = np.empty(len(after_items), dtype=np.int64)
    ratings = np.empty(len(after_items), dtype=np.int64)
    for pos, row in enumerate(after_items):
        users[pos] = user_index.setdefault(row.user_id, len(user_index))
        items[pos] = item_index.setdefault(row.isbn, len(item_index))
        ratings[pos] = row.rating

    dataset = Dataset(
        n_users=len(user_index),
        n_items=len(item_index),
        users=users,
        items=items,
        ratings=ratings,
        user_ids=tuple(user_index),
        item_ids=tuple(item_index),
    )
    summary = ProvenanceSummary(
        n_input=n_input,
        dropped_implicit=dropped_implicit,
        dropped_duplicate=dropped_duplicate,
        dropped_user_filter=dropped_user_filter,
        dropped_item_filter=dropped_item_filter,
        kept=dataset.n_interactions,
        min_user_profile_after=int(np.bincount(users, minlength=dataset.n_users).min()),
        min_item_readers_after=int(np.bincount(items, minlength=dataset.n_items).min()),
    )
    return dataset, summary


def dataset_stats(d: Dataset) -> DatasetStats:
    """Interaction density summary: per-user / per-item averages and sparsity."""
    n = d.n_interactions
    return DatasetStats(
        n_users=d.n_users,
        n_items=d.n_items,
        n_interactions=n,
        interactions_per_user=n / d.n_users,
        interactions_per_item=n / d.n_items,
        sparsity=1.0 - n / (d.n_users * d.n_items),
    )


# Canonical file round trip -------------------------------------------------

DATASET_FILE = "dataset.csv"
USER_IDMAP_FILE = "idmap_users.csv"
ITEM_IDMAP_FILE = "idmap_items.csv"


def write_dataset(d: Dataset, outdir: str | Path) -> None:
    """Write ``dataset.csv`` and the two id-map files (UTF-8, comma separated)."""
    outdir = Path(outdir)
    rows = io.StringIO()
    rows.write("user_index,item_index,rating\n")
    for u, i, r in zip(d.users, d.items, d.ratings):
        rows.write(f"{u},{i},{r}\n")
    atomic_write_text(outdir / DATASET_FILE, rows.getvalue())

    for filename, ids in ((USER_IDMAP_FILE, d.user_ids), (ITEM_IDMAP_FILE, d.item_ids)):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["raw_id", "index"])
        for index, raw_id in enumerate(ids):
            writer.writerow([raw_id, index])
        atomic_write_text(outdir / filename, buf.getvalue())


def load_dataset(outdir: str | Path) -> Dataset:
    """Load the canonical dataset written by :func:`write_dataset`."""
    outdir = Path(outdir)
    user_ids = _load_idmap(outdir / USER_IDMAP_FILE)
    item_ids = _load_idmap(outdir / ITEM_IDMAP_FILE)
    path = outdir / DATASET_FILE
    if not path.exists():
        raise IngestError(f"missing canonical dataset file {path}")
    data = np.loadtxt(path, dtype=np.int64, delimiter=",", skiprows=1, ndmin=2)
    return Dataset(
        n_users=len(user_ids),
        n_items=len(item_ids),
        users=data[:, 0].copy(),
        items=data[:, 1].copy(),
        ratings=data[:, 2].copy(),
        user_ids=user_ids,
        item_ids=item_ids,
    )


def _load_idmap(path: Path) -> tuple[str, ...]:
    if not path.exists():
        raise IngestError(f"missing id map file {path}")
    with path.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["raw_id", "index"]:
            raise IngestError(f"unexpected id map header in {path}: {header}")
        ids: list[str] = []
        for row in reader:
            raw_id, index = row
            if int(index) != len(ids):
                raise IngestError(f"non-contiguous index {index} in {path}")
            ids.append(raw_id)
    return tuple(ids)


def raw_lines(rows: Iterable[RawRating]) -> str:
    """Render rows back into the raw file format (used by tests and demos)."""
    out = [RATINGS_HEADER]
    for row in rows:
        out.append(f'"{row.user_id}";"{row.isbn}";"{row.rating}"')
    return "\n".join(out) + "\n"

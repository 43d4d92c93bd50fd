"""Run configuration: sectioned ``key = value`` file with one section per model.

Example::

    [run]
    raw = data/BX-Book-Ratings.csv
    outdir = out
    split_ratio = 0.8
    seed = 42
    top_n = 10
    strict = false

    [model "mostpop"]
    algorithm = MostPop

    [model "bpr"]
    algorithm = BPR
    epochs = 100

    [import "neumf"]
    file = external/recs_neumf.csv

Model sections may override any hyperparameter (k, learning_rate,
regularization, epochs, neighbors, alpha, prior_shape, prior_rate, seed);
unset fields take the algorithm defaults.  ``[import]`` sections bring
externally produced recommendation lists into the evaluation.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, replace
from pathlib import Path

from fairbook.errors import ConfigError
from fairbook.manifest import sha256_text
from fairbook.recommenders.base import ModelConfig, resolve_algorithm

_MODEL_SECTION = re.compile(r'^model\s+"([^"]+)"$')
_IMPORT_SECTION = re.compile(r'^import\s+"([^"]+)"$')

_INT_FIELDS = {"k", "epochs", "neighbors", "seed"}
_FLOAT_FIELDS = {"learning_rate", "regularization", "alpha", "prior_shape", "prior_rate"}


@dataclass(frozen=True)
class ImportEntry:
    name: str
    path: Path


@dataclass(frozen=True)
class RunConfig:
    raw_path: Path
    outdir: Path
    split_ratio: float = 0.8
    seed: int = 42
    top_n: int = 10
    strict: bool = False
    models: tuple[ModelConfig, ...] = ()
    imports: tuple[ImportEntry, ...] = ()

    def model_names(self) -> list[str]:
        return [m.name for m in self.models]

    def validate(self) -> None:
        if not 0.0 < self.split_ratio < 1.0:
            raise ConfigError(f"split_ratio must be in (0, 1), got {self.split_ratio}")
        if self.top_n < 1:
            raise ConfigError(f"top_n must be >= 1, got {self.top_n}")
        names = [m.name for m in self.models] + [imp.name for imp in self.imports]
        dupes = {n for n in names if names.count(n) > 1}
        if dupes:
            raise ConfigError(f"duplicate model/import names: {sorted(dupes)}")
        for model in self.models:
            try:
                model.resolved()
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc

    def with_seed(self, seed: int) -> "RunConfig":
        """Override the run seed; models without an explicit seed follow it."""
        models = tuple(
            m if m.seed != self.seed else replace(m, seed=seed) for m in self.models
        )
        return replace(self, seed=seed, models=models)


def _parse_bool(value: str, key: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(path.read_text(encoding="utf-8"), source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc

    if "run" not in parser:
        raise ConfigError(f"{path}: missing [run] section")
    run = parser["run"]
    try:
        raw = Path(run.get("raw", "BX-Book-Ratings.csv"))
        outdir = Path(run.get("outdir", "out"))
        split_ratio = float(run.get("split_ratio", "0.8"))
        seed = int(run.get("seed", "42"))
        top_n = int(run.get("top_n", "10"))
        strict = _parse_bool(run.get("strict", "false"), "strict")
    except ValueError as exc:
        raise ConfigError(f"{path}: bad [run] value: {exc}") from exc

    models: list[ModelConfig] = []
    imports: list[ImportEntry] = []
    for section in parser.sections():
        if section == "run":
            continue
        model_match = _MODEL_SECTION.match(section)
        import_match = _IMPORT_SECTION.match(section)
        if import_match:
            body = parser[section]
            if "file" not in body:
                raise ConfigError(f"{path}: [{section}] needs a file key")
            imports.append(ImportEntry(name=import_match.group(1), path=Path(body["file"])))
            continue
        if not model_match:
            raise ConfigError(f"{path}: unexpected section [{section}]")
        body = parser[section]
        if "algorithm" not in body:
            raise ConfigError(f"{path}: [{section}] needs an algorithm key")
        try:
            algorithm = resolve_algorithm(body["algorithm"])
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        kwargs: dict = {"algorithm": algorithm, "name": model_match.group(1), "seed": seed}
        for key, value in body.items():
            if key == "algorithm":
                continue
            if key in _INT_FIELDS:
                kwargs[key] = int(value)
            elif key in _FLOAT_FIELDS:
                kwargs[key] = float(value)
            else:
                raise ConfigError(f"{path}: [{section}] unknown key {key!r}")
        models.append(ModelConfig(**kwargs))

    config = RunConfig(
        raw_path=raw,
        outdir=outdir,
        split_ratio=split_ratio,
        seed=seed,
        top_n=top_n,
        strict=strict,
        models=tuple(models),
        imports=tuple(imports),
    )
    config.validate()
    return config


def config_hash(config: RunConfig) -> str:
    """Stable digest of the semantic config content (path-independent)."""
    parts = [
        f"split_ratio={config.split_ratio!r}",
        f"seed={config.seed}",
        f"top_n={config.top_n}",
        f"strict={config.strict}",
    ]
    for model in sorted(config.models, key=lambda m: m.name or ""):
        resolved = model.resolved()
        parts.append(
            "model:" + ",".join(
                f"{key}={getattr(resolved, key)!r}"
                for key in (
                    "name", "algorithm", "k", "learning_rate", "regularization",
                    "epochs", "neighbors", "alpha", "prior_shape", "prior_rate", "seed",
                )
            )
        )
    for imp in sorted(config.imports, key=lambda i: i.name):
        parts.append(f"import:{imp.name}")
    return sha256_text("\n".join(parts))

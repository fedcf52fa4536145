"""JSON loading for games, attitudes, prior ambiguity and bundled fixtures."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Union

from .game import Game, InstanceError

FIXTURES = ("intro", "sa2_first", "sa2_second")


def read_json(path: Union[str, Path]):
    path = Path(path)
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise InstanceError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def fixture_path(name: str) -> Path:
    name = name[:-5] if name.endswith(".json") else name
    if name not in FIXTURES:
        raise InstanceError(f"unknown fixture {name!r}; bundled fixtures are {', '.join(FIXTURES)}")
    return Path(str(resources.files("ambipersuade") / "data" / f"{name}.json"))


def load_game(source: Union[str, Path]) -> Game:
    """Load a game from a path, or from a bundled fixture name such as ``intro``."""
    p = Path(source)
    if not p.exists():
        stem = p.name[:-5] if p.name.endswith(".json") else p.name
        if stem in FIXTURES and p.parent == Path("."):
            p = fixture_path(stem)
    d = read_json(p)
    if not isinstance(d, dict):
        raise InstanceError(f"{p}: game must be a JSON object")
    try:
        return Game.from_dict(d)
    except InstanceError as exc:
        raise InstanceError(f"{p}: {exc}") from None


def load_fixture(name: str) -> Game:
    return Game.from_dict(read_json(fixture_path(name)))


def _object(path, d, what):
    if not isinstance(d, dict):
        raise InstanceError(f"{path}: {what} must be a JSON object")
    return d


def _experiment_dict(game: Game, d: dict) -> dict:
    # a kernel without messages is read as a canonical experiment of ``game``
    if isinstance(d, dict) and "messages" not in d:
        d = dict(d, messages=list(game.actions))
    return d


def load_experiment(path, game: Game):
    from .game import Experiment

    d = _object(path, read_json(path), "experiment")
    try:
        return Experiment.from_dict(_experiment_dict(game, d))
    except InstanceError as exc:
        raise InstanceError(f"{path}: {exc}") from None


def load_ambiguous(path, game: Game):
    from .ambiguity import AmbiguousExperiment

    d = _object(path, read_json(path), "ambiguous experiment")
    if not isinstance(d.get("experiments"), list):
        raise InstanceError(f"{path}: field 'experiments' must be a list")
    try:
        return AmbiguousExperiment.from_dict(dict(d, experiments=[_experiment_dict(game, e) for e in d["experiments"]]))
    except InstanceError as exc:
        raise InstanceError(f"{path}: {exc}") from None


def load_split(path, game: Game):
    from .splitting import SplitTriple

    d = _object(path, read_json(path), "split")
    for k in ("hi", "lo", "lam"):
        if k not in d:
            raise InstanceError(f"{path}: split is missing field {k!r}")
    try:
        return SplitTriple.from_dict(dict(d, hi=_experiment_dict(game, d["hi"]), lo=_experiment_dict(game, d["lo"])))
    except InstanceError as exc:
        raise InstanceError(f"{path}: {exc}") from None


def load_eta(path):
    from .prior import PriorAmbiguity

    d = _object(path, read_json(path), "prior ambiguity")
    try:
        return PriorAmbiguity.from_dict(d)
    except InstanceError as exc:
        raise InstanceError(f"{path}: {exc}") from None

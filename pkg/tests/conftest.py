"""Shared fixtures: the music walkthrough bundle shipped under data/."""

from __future__ import annotations

from pathlib import Path

import pytest

from entres.cli import ingest
from entres.model import Constant, Kind
from entres.rules import load_spec
from entres.simkit import SimTable, TableResolver

ROOT = Path(__file__).resolve().parent.parent
MUSIC = ROOT / "data" / "music"


def e(text: str) -> Constant:
    return Constant(Kind.ENTITY, text)


def v(text: str) -> Constant:
    return Constant(Kind.VALUE, text)


@pytest.fixture(scope="session")
def music_dir() -> Path:
    return MUSIC


@pytest.fixture(scope="session")
def music_spec():
    return load_spec(str(MUSIC / "music.er"))


@pytest.fixture(scope="session")
def music_db(music_spec):
    return ingest(str(MUSIC), music_spec.schema)


@pytest.fixture(scope="session")
def music_table():
    return SimTable.load(str(MUSIC / "simtable.tsv"))


@pytest.fixture(scope="session")
def music_sims(music_table):
    return TableResolver(music_table)

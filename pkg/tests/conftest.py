from pathlib import Path

import pytest

from mboe import build_interlanguage_map, build_mention_dictionary

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture()
def apple_dict():
    return build_mention_dictionary(
        [
            ("apple", "Apple Inc.", 3),
            ("apple", "Apple (food)", 1),
            ("paris", "Paris", 5),
            ("new york", "New York City", 2),
        ],
        "en",
    )


@pytest.fixture()
def apple_ilmap():
    return build_interlanguage_map(
        [
            ("en", "Apple Inc.", "Q312"),
            ("en", "Apple (food)", "Q89"),
            ("en", "Paris", "Q90"),
            ("en", "New York City", "Q60"),
            ("ja", "東京", "Q7473516"),
        ]
    )

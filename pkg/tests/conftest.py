"""
Pytest configuration for Stancy testing.
Sets up small synthetic datasets, a seeded toy encoder and on-disk fixtures.
"""

import json
import os
import random
import sys

import pytest

# Add repository root to Python path for imports
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.data.records import Split, StanceLabel, StancePair  # noqa: E402
from src.encoder.encoder_service import build_toy_encoder  # noqa: E402

SUPPORT_CUES = ["helps", "improves", "benefits", "protects"]
OPPOSE_CUES = ["harms", "worsens", "damages", "threatens"]
TOPICS = ["schools", "health", "privacy", "jobs", "cities", "science", "farms", "rivers"]
FILLERS = ["clearly", "often", "really", "surely", "usually", "mostly"]


def make_pair(pair_id, claim, perspective, label=StanceLabel.SUPPORT, split=Split.TRAIN):
    return StancePair(pair_id=pair_id, claim_text=claim, perspective_text=perspective,
                      label=label, split=split)


def keyword_pairs(count=200, seed=0, split=Split.TRAIN):
    """Pairs whose stance is fully determined by a cue word in the perspective."""
    rng = random.Random(seed)
    pairs = []
    for i in range(count):
        label = StanceLabel.SUPPORT if i % 2 == 0 else StanceLabel.OPPOSE
        cues = SUPPORT_CUES if label is StanceLabel.SUPPORT else OPPOSE_CUES
        topic = rng.choice(TOPICS)
        claim = f"the new policy on {topic} should pass"
        perspective = f"it {rng.choice(FILLERS)} {rng.choice(cues)} {topic}"
        pairs.append(make_pair(f"k{i:04d}", claim, perspective, label, split))
    return pairs


@pytest.fixture
def toy_pairs():
    """Six pairs spread over the three splits."""
    return [
        make_pair("1_1", "We should ban guns", "Guns cause harm", StanceLabel.SUPPORT, Split.TRAIN),
        make_pair("1_2", "We should ban guns", "Self defense is a right", StanceLabel.OPPOSE,
                  Split.TRAIN),
        make_pair("2_1", "Surveillance keeps us safe", "Nothing to worry about",
                  StanceLabel.SUPPORT, Split.DEV),
        make_pair("2_2", "Surveillance keeps us safe", "The user privacy will go away",
                  StanceLabel.OPPOSE, Split.DEV),
        make_pair("3_1", "Homework should be abolished", "Kids need free time",
                  StanceLabel.SUPPORT, Split.TEST),
        make_pair("3_2", "Homework should be abolished", "Practice improves learning",
                  StanceLabel.OPPOSE, Split.TEST),
    ]


@pytest.fixture
def keyword_dataset():
    """200 training pairs plus small dev and test splits of the keyword task."""
    return (keyword_pairs(200, seed=0, split=Split.TRAIN)
            + keyword_pairs(20, seed=1, split=Split.DEV)
            + keyword_pairs(20, seed=2, split=Split.TEST))


def vocabulary_texts(pairs):
    return [t for p in pairs for t in (p.claim_text, p.perspective_text)]


@pytest.fixture
def toy_encoder(toy_pairs):
    """2-layer, H=32 toy encoder over the toy pair vocabulary."""
    return build_toy_encoder(vocabulary_texts(toy_pairs), seed=0, max_sequence_length=64)


@pytest.fixture
def perspectrum_dir(tmp_path):
    """A miniature copy of the released Perspectrum file layout."""
    claims = [
        {
            "cId": 1,
            "text": "We should  ban guns",
            "perspectives": [
                {"pids": [10, 11], "stance_label_3": "SUPPORT"},
                {"pids": [12], "stance_label_3": "UNDERMINE"},
            ],
        },
        {
            "cId": 2,
            "text": "Surveillance keeps us safe",
            "perspectives": [
                {"pids": [20], "stance_label_3": "MILDLY-SUPPORT"},
                {"pids": [21], "stance_label_3": "MILDLY-UNDERMINE"},
                {"pids": [22], "stance_label_3": "NOT ENOUGH INFO"},
            ],
        },
        {
            "cId": 3,
            "text": "Homework should be abolished",
            "perspectives": [{"pids": [30], "stance_label_3": "UNDERMINE"}],
        },
    ]
    pool = [
        {"pId": 10, "text": "Guns cause harm"},
        {"pId": 11, "text": "Fewer guns,\nfewer deaths"},
        {"pId": 12, "text": "Self defense is a right"},
        {"pId": 20, "text": "Nothing to worry about"},
        {"pId": 21, "text": "The user privacy will go away"},
        {"pId": 22, "text": "Cameras are everywhere"},
        {"pId": 30, "text": "Practice improves learning"},
    ]
    split = {"1": "train", "2": "dev", "3": "test"}
    for name, payload in (
        ("perspectrum_with_answers_v1.0.json", claims),
        ("perspective_pool_v1.0.json", pool),
        ("dataset_split_v1.0.json", split),
    ):
        (tmp_path / name).write_text(json.dumps(payload), encoding="utf-8")
    return tmp_path


@pytest.fixture
def released_perspectrum_dir():
    """Directory of the released dataset, or skip."""
    path = os.getenv("PERSPECTRUM_DIR")
    if not path or not os.path.isdir(path):
        pytest.skip("PERSPECTRUM_DIR is not set")
    return path

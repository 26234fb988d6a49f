import logging
from pathlib import Path

import pytest

from osreval.config import DEFAULT_CONFIG

RUN_CSV = """\
sample_id,label,logit_0,logit_1,logit_2,feat_0,feat_1
a,0,5.0,1.0,0.0,3.0,4.0
b,1,0.5,4.0,1.0,0.0,6.0
c,2,0.0,1.0,3.5,5.0,0.0
d,0,1.0,2.0,0.5,1.0,1.0
u1,-1,1.0,1.2,0.9,0.5,0.5
u2,-1,0.2,0.1,0.3,0.1,0.2
"""

ATTRIBUTES_CSV = """\
class,attr_0,attr_1,attr_2,attr_3
albatross,1.0,0.8,0.0,0.1
gull,0.9,0.9,0.1,0.0
tern,0.7,1.0,0.2,0.0
wren,0.0,0.1,1.0,0.6
finch,0.1,0.0,0.9,0.9
heron,0.5,0.5,0.5,0.5
"""


@pytest.fixture(autouse=True)
def isolated_config(monkeypatch):
    # Settings from the developer's shell must not leak into tests.
    for key in DEFAULT_CONFIG:
        monkeypatch.delenv(key, raising=False)
    yield
    # The CLI installs its own handler and stops propagation; caplog needs it back.
    logger = logging.getLogger("osreval")
    logger.handlers.clear()
    logger.setLevel(logging.NOTSET)
    logger.propagate = True


@pytest.fixture
def write_file(tmp_path):
    def write(name: str, text: str) -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return write


@pytest.fixture
def run_file(write_file):
    return write_file("run.csv", RUN_CSV)


@pytest.fixture
def attributes_file(write_file):
    return write_file("attributes.csv", ATTRIBUTES_CSV)

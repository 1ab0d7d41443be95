import pytest

from scmn import channel as ch
from scmn.de_core import DegreeProfile

BUILTINS = ("bec", "dec", "pr2")


@pytest.fixture(params=BUILTINS)
def model(request):
    return ch.builtin(request.param)


@pytest.fixture(params=[(4, 2, 2), (6, 3, 3)], ids=["422", "633"])
def profile(request):
    return DegreeProfile(*request.param)

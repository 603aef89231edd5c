import pytest

from polymix import fixtures


@pytest.fixture(scope="session")
def cube():
    return fixtures.cube()


@pytest.fixture(scope="session")
def tetrahedron():
    return fixtures.regular_tetrahedron()


@pytest.fixture(scope="session")
def pyramid():
    return fixtures.square_pyramid()


@pytest.fixture(scope="session")
def l_prism():
    return fixtures.l_prism()


CUBE_OFF = """\
OFF
8 6 12
0 0 0
1 0 0
1 1 0
0 1 0
0 0 1
1 0 1
1 1 1
0 1 1
4 0 3 2 1
4 4 5 6 7
4 0 1 5 4
4 2 3 7 6
4 1 2 6 5
4 3 0 4 7
"""

PYRAMID_OFF = """\
OFF
5 5 8
0 0 0
1 0 1
0 1 1
-1 0 1
0 -1 1
3 0 2 1
3 0 3 2
3 0 4 3
3 0 1 4
4 1 2 3 4
"""

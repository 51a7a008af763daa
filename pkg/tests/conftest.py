import math

import pytest

from lorentz_cg import wdata

# Frozen oracle values (each derived independently; see the test that checks it).
RHO = 0.8279008826947192            # sqrt(6) Gamma(3/4) / Gamma(1/4)
OMEGA1 = 5.244115108584239          # Gamma(1/4) Gamma(1/2) / Gamma(3/4)
PHI1 = -2.396280469471184           # -2 * (1/2) Gamma(3/4) Gamma(1/2) / Gamma(5/4)


@pytest.fixture(scope="session")
def rho():
    return wdata.cg_rho()[0]


@pytest.fixture(scope="session")
def vstar_data():
    return wdata.case1_data(wdata.Case1Params.vstar())


@pytest.fixture(scope="session")
def deformed_pi4():
    return wdata.lorentz_deform(wdata.CGBase.classical(), complex(math.cos(math.pi / 4),
                                                                   math.sin(math.pi / 4)))

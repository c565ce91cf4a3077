import math

import pytest

from fdpfc import CircuitParams, GridSource, TransformerSpec

SQRT2 = math.sqrt(2.0)

# Reference operating points for the four zone experiments:
# (U_ref amplitude in volts, phase lead of u_oa vs u_ia1 in degrees)
ZONE_REFS = (
    (33.0 * SQRT2, 76.0),
    (28.0 * SQRT2, 170.0),
    (32.0 * SQRT2, -120.0),
    (26.0 * SQRT2, -38.0),
)


@pytest.fixture(scope="session")
def grid() -> GridSource:
    return GridSource(u_iml=200.0 * SQRT2, f_hz=50.0, n_i=200.0 / 70.0)


@pytest.fixture(scope="session")
def t_o() -> TransformerSpec:
    return TransformerSpec(220.0 / 127.0)


@pytest.fixture(scope="session")
def circuit(grid, t_o) -> CircuitParams:
    return CircuitParams(f_s=25e3, l_f=0.66e-3, c_f=4.4e-6, r_load=50.0, grid=grid, t_o=t_o)

import pytest

from rmflab import modform
from rmflab.sieve import sieve


@pytest.fixture(scope="session")
def tau_table():
    return modform.build_tau_table(modform.N_EXACT)


@pytest.fixture(scope="session")
def lam(tau_table):
    return modform.lambda_from_tau(tau_table)


@pytest.fixture(scope="session")
def ptab():
    return sieve(modform.N_EXACT)

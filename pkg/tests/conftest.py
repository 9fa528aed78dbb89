import datetime as dt

import pytest

from creditstory.synthgen import GeneratorConfig, generate

HEADER = "CUST00000000A00120180201"
TRADE = "TR01AC0000000000000001CC201702010200001234560000500000000010000000000000000000"
INQUIRY = "IN01BNKRBC20180115AL"
COLLECTION = "CL01AGCY01201706010000045000O"


def pf_lines(run_date=dt.date(2018, 2, 1), n=18, overrides=None):
    """PF lines for the n months after the run month; overrides maps month offset -> (dpd, flag)."""
    overrides = overrides or {}
    out = []
    y, m = run_date.year, run_date.month
    for k in range(1, n + 1):
        mm = m - 1 + k
        dpd, flag = overrides.get(k, ("0", "N"))
        out.append(f"PF01{y + mm // 12:04d}{mm % 12 + 1:02d}{dpd}{flag}")
    return out


def block(*lines, header=HEADER):
    return "\n".join([header, *lines, "END0"]) + "\n"


@pytest.fixture(scope="session")
def small_corpus():
    """1,000 customers from the default generator at seed 42."""
    return generate(GeneratorConfig(n_customers=1000, seed=42))


# acceptance criteria outcomes, printed as one line each at the end of the run
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])

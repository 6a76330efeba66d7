import numpy as np
import pytest

from tsmtl import ProblemData

AQ_HEADER = ("Date;Time;CO(GT);PT08.S1(CO);NMHC(GT);C6H6(GT);PT08.S2(NMHC);NOx(GT);"
             "PT08.S3(NOx);NO2(GT);PT08.S4(NO2);PT08.S5(O3);T;RH;AH;;")


def _dec(v: float) -> str:
    """Format a number the way the UCI file does (decimal comma)."""
    s = f"{v:.1f}" if v != int(v) else str(int(v))
    return s.replace(".", ",")


def aq_row(date: str, hour: int, co: float, sensors=(1360, 1046, 1056, 1692, 1268),
           temp: float = 13.6, rh: float = 48.9, ah: float = 0.7578) -> str:
    s1, s2, s3, s4, s5 = sensors
    fields = [date, f"{hour:02d}.00.00", _dec(co), _dec(s1), "150", "11,9", _dec(s2), "166",
              _dec(s3), "113", _dec(s4), _dec(s5), _dec(temp), _dec(rh), f"{ah:.4f}".replace(".", ",")]
    return ";".join(fields) + ";;"


def write_air_quality(path, days: int = 3, seed: int = 0, missing_rows=(), trailing_blank=5):
    """Write a file in the UCI Air Quality layout covering every hour of ``days`` days.

    ``missing_rows`` lists (day, hour, column) cells to set to -200.
    """
    rng = np.random.default_rng(seed)
    lines = [AQ_HEADER]
    for d in range(days):
        date = f"{10 + d:02d}/03/2004"
        for h in range(24):
            vals = dict(co=round(float(rng.uniform(0.5, 4)), 1),
                        sensors=tuple(int(v) for v in rng.integers(700, 2000, 5)),
                        temp=round(float(rng.uniform(5, 30)), 1),
                        rh=round(float(rng.uniform(20, 80)), 1))
            for (md, mh, col) in missing_rows:
                if (md, mh) == (d, h):
                    if col == "co":
                        vals["co"] = -200
                    elif col == "temp":
                        vals["temp"] = -200
                    elif col == "s3":
                        s = list(vals["sensors"]); s[2] = -200; vals["sensors"] = tuple(s)
            lines.append(aq_row(date, h, **vals))
    lines += [";" * 16] * trailing_blank
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_problem(rng, p=3, T=4, n=6, ragged=False):
    tasks = []
    for t in range(T):
        nt = n + (t if ragged else 0)
        X = rng.standard_normal((nt, p))
        y = rng.standard_normal(nt)
        tasks.append((X, y))
    return ProblemData(tasks)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

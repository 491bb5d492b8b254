import numpy as np
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def chord_oracle(grid, values):
    """Least concave nondecreasing majorant through the origin by brute force.

    Every node value is the max over chords between an augmented point on its
    left ((0, 0) or a node) and a node on its right, and over the horizontal
    rays g_i on [t_i, inf).
    """
    t = np.concatenate(([0.0], np.asarray(grid, float)))
    g = np.concatenate(([0.0], np.asarray(values, float)))
    out = np.empty(len(grid))
    for k in range(1, t.size):
        tk = t[k]
        a = np.arange(0, k + 1)
        b = np.arange(k, t.size)
        ta, tb = t[a][:, None], t[b][None, :]
        ga, gb = g[a][:, None], g[b][None, :]
        with np.errstate(invalid="ignore", divide="ignore"):
            lam = np.where(tb > ta, (tk - ta) / (tb - ta), 1.0)
        chord = ga + lam * (gb - ga)
        out[k - 1] = max(chord.max(), g[1:k + 1].max())
    return out


# acceptance verdict lines, echoed after the run so they survive output capture
VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(VERDICTS, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)

import numpy as np

from nearfield_dsm.forward import mie_disk_reference
from nearfield_dsm.synth import NearFieldData


def mie_data(circle, ctx, radius=0.25, q=0.3, center=(0.0, 0.0)):
    """Near-field data of a homogeneous disk from the separation-of-variables series."""
    Us = np.empty((circle.m, circle.m), complex)
    dUs = np.empty_like(Us)
    for j, y in enumerate(circle.nodes):
        pair = mie_disk_reference(radius, center, q, ctx, y, circle)
        Us[:, j], dUs[:, j] = pair.us, pair.dnus
    return NearFieldData(circle, ctx.k, Us, dUs)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

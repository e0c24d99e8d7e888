import numpy as np
import pytest

from rank1glm import Dataset, Session, SimSpec, gen_session


def make_dataset(spec: SimSpec) -> Dataset:
    """Build a Dataset from a simulation spec, one Session per session."""
    sessions = []
    for s in range(spec.sessions):
        events, bold, truth = gen_session(spec, s)
        sessions.append(
            Session(events=events, bold=bold, confounds=truth["confounds"])
        )
    return Dataset(sessions=sessions, tr=spec.tr)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

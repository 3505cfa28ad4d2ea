import os
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from fuzz_assure.incidence import IncidenceRecord

settings.register_profile(
    "default", max_examples=200, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

DATA = Path(__file__).parent / "data"

species_ids = st.sampled_from([f"s{i}" for i in range(25)])
records = st.builds(
    IncidenceRecord,
    input_id=st.text(min_size=1, max_size=4),
    species=st.frozensets(species_ids, max_size=6),
)
record_streams = st.lists(records, max_size=60)


@pytest.fixture
def data_dir():
    return DATA

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdmalink.analytic import Direction
from cdmalink.linkchain import Fading
from cdmalink.scenario import (
    PRESETS,
    CodeSection,
    ExperimentSection,
    ScenarioError,
    ScenarioFile,
    ScenarioSection,
    dumps,
    load,
    parse,
    preset_path,
)

BASIC = """\
[scenario]
users = 10
ebn0_db = 6   # per information bit
direction = downlink

[code]
rate_inverse = 2
constraint_length = 3
generators = 5 7
spectrum = 5:1, 6:4, 7:12
"""


def test_parse_basic():
    sf = parse(BASIC)
    assert sf.scenario.users == 10
    assert sf.scenario.ebn0_db == 6.0
    assert sf.directions == [Direction.DOWNLINK]
    assert sf.code.generators == ("5", "7")
    assert sf.code_spec().generators == (5, 7)
    assert sf.spectrum().weights == {5: 1.0, 6: 4.0, 7: 12.0}
    assert sf.free_distance() == 5
    sc = sf.link()
    assert sc.coded_snr_db == pytest.approx(6 - 10 * math.log10(2))


def test_defaults_and_channel():
    sf = parse("[scenario]\nusers = 3\nchannel = awgn\n")
    assert sf.directions == [Direction.UPLINK, Direction.DOWNLINK]
    assert sf.fading is Fading.NONE
    assert sf.code_spec() is None and sf.spectrum() is None
    assert parse("").experiment.grid_points == 2001
    assert parse("").experiment.combining == "phase"
    assert parse("[experiment]\ncombining = snr\n").experiment.combining == "snr"


def test_spectrum_computed_from_generators():
    sf = parse("[code]\nrate_inverse = 2\nconstraint_length = 3\ngenerators = 5 7\nspectrum_max_distance = 8\n")
    assert sf.spectrum().weights == {5: 1.0, 6: 4.0, 7: 12.0, 8: 32.0}


def test_unknown_key_reports_line():
    with pytest.raises(ScenarioError, match=r"f\.ini:4: unknown key 'colour' in \[scenario\]"):
        parse("[scenario]\nusers = 2\n\ncolour = red\n", "f.ini")


def test_unknown_section_reports_line():
    with pytest.raises(ScenarioError, match=r":3: unknown section \[plots\]"):
        parse("[scenario]\nusers = 2\n[plots]\nx = 1\n")


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("[scenario]\nusers = many\n", ":2: bad value for 'users'"),
        ("[scenario]\ndirection = sideways\n", ":2: bad value for 'direction'"),
        ("[code]\ngenerators = 5 9\n", ":2: bad value for 'generators'"),
        ("[code]\nspectrum = 5-1\n", ":2: bad value for 'spectrum'"),
        ("[scenario]\nusers = 0\n", "users must be at least 1"),
        ("[code]\ngenerators = 5 7\nrate_inverse = 2\n", "constraint_length"),
        ("[code]\nrate_inverse = 3\nconstraint_length = 3\ngenerators = 5 7\n", "rate_inverse"),
        ("[code]\nspectrum = 5:1 6:4\nfree_distance = 6\n", "disagrees"),
        ("[scenario]\nusers = 2\nusers = 3\n", "users"),
        ("[experiment]\ncombining = egc\n", ":2: bad value for 'combining'"),
        ("no section header\n", "header"),
    ],
)
def test_parse_errors(text, fragment):
    with pytest.raises(ScenarioError, match=fragment):
        parse(text)


def test_round_trip_basic():
    sf = parse(BASIC)
    assert parse(dumps(sf)) == sf
    assert dumps(parse(dumps(sf))) == dumps(sf)


@settings(max_examples=60, deadline=None)
@given(
    users=st.integers(1, 200),
    ebn0=st.floats(-10, 30, allow_nan=False),
    direction=st.sampled_from(["uplink", "downlink", "both"]),
    seed=st.one_of(st.none(), st.integers(0, 2**63)),
    grid_max=st.one_of(st.none(), st.floats(1e-3, 100)),
    weights=st.lists(st.floats(0.5, 1e6), min_size=0, max_size=4),
)
def test_round_trip_property(users, ebn0, direction, seed, grid_max, weights):
    spectrum = tuple((5 + i, w) for i, w in enumerate(weights))
    sf = ScenarioFile(
        ScenarioSection(users=users, ebn0_db=ebn0, direction=direction),
        CodeSection(rate_inverse=2, spectrum=spectrum),
        ExperimentSection(seed=seed, grid_max=grid_max),
    )
    assert parse(dumps(sf)) == sf


@pytest.mark.parametrize("name", PRESETS)
def test_presets_load(name):
    sf = load(preset_path(name))
    assert parse(dumps(sf)) == sf


def test_fig_presets():
    assert load(preset_path("fig2")).scenario.users == 10
    assert load(preset_path("fig3")).scenario.users == 70
    fig4 = load(preset_path("fig4"))
    assert fig4.scenario.combined_bits == 164
    assert fig4.free_distance() == 164


def test_infinite_ebn0_means_no_noise():
    sf = parse("[scenario]\nusers = 1\nebn0_db = inf\n")
    assert sf.link().noise_density == 0.0

import pytest

from dapw.config import PROFILES, ConfigError, ExperimentConfig, load_config, parse_config
from dapw.signals import ValidationError


def test_defaults():
    cfg = parse_config("")
    assert cfg == ExperimentConfig()
    assert cfg.scenario.count == 100 and cfg.scenario.fs == 10_000.0
    assert cfg.demod_mode == "full" and cfg.workers == 1


def test_large_profile():
    cfg = parse_config("[experiment]\nprofile = large\n")
    assert (cfg.scenario.count, cfg.scenario.fs, cfg.scenario.duration) == (9000, 20_000.0, 60.0)
    assert cfg.profile == "large"


def test_full_file():
    text = """
[experiment]
demod_mode = bypass   ; comment
workers = 3
output_dir = out

[scenario]
count = 12
master_seed = 5
k_range = 0.001, 0.02
duty_choices = 0.25, 0.5
n_choices = 2
integer_cpm = yes
min_freq_separation = auto

[carrier]
f_c = 60
U_rms = 120

[dapw]
amp_steps = 100
freq_reject_multiples = 2, 3
energy_neighborhood_bins = none
"""
    cfg = parse_config(text)
    assert cfg.demod_mode == "bypass" and cfg.workers == 3 and cfg.output_dir == "out"
    s = cfg.scenario
    assert (s.count, s.master_seed, s.k_range, s.duty_choices, s.n_choices) == (12, 5, (0.001, 0.02), (0.25, 0.5), (2,))
    assert s.integer_cpm and s.min_freq_separation is None
    assert s.carrier.f_c == 60.0 and s.carrier.U_rms == 120.0
    assert cfg.dapw.amp_steps == 100 and cfg.dapw.freq_reject_multiples == (2, 3)
    assert cfg.dapw.energy_neighborhood_bins is None


@pytest.mark.parametrize(
    "text, line, fragment",
    [
        ("[scenario]\ncount = 10\n\n[bogus]\nx = 1\n", 4, "unknown section"),
        ("[scenario]\ncount = 10\ncolour = red\n", 3, "unknown key"),
        ("[scenario]\n\n\ncount = ten\n", 4, "scenario.count"),
        ("[scenario]\nk_range = 0.1\n", 2, "two numbers"),
        ("[experiment]\nworkers = 2\nworkers = 3\n", 3, "duplicate"),
        ("[experiment]\nworkers = 0\n", 2, "workers"),
        ("[experiment]\n\nprofile = huge\n", 3, "unknown profile"),
        ("[dapw]\namp_steps = 3\n", 2, "amp_steps"),
        ("[experiment]\ndemod_mode = half\n", 2, "demod_mode"),
        ("[scenario]\ninteger_cpm = maybe\n", 2, "boolean"),
        ("[scenario]\nf_range = 1, 400\n", 2, "f_range"),
        ("[scenario]\ncount = 1\n[scenario]\n", 3, "duplicate section"),
        ("count = 1\n", 1, "outside"),
        ("[scenario]\ncount = 1\nnonsense line\n", 3, "cannot parse"),
    ],
)
def test_line_precise_errors(text, line, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config(text, "exp.ini")
    msg = str(info.value)
    assert msg.startswith(f"exp.ini:{line}:")
    assert fragment in msg


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.ini")


def test_load_file(tmp_path):
    p = tmp_path / "c.ini"
    p.write_text("[scenario]\ncount = 3\n")
    assert load_config(p).scenario.count == 3


def test_to_dict_has_no_component_count():
    d = ExperimentConfig().to_dict()
    assert "n_components" not in d["dapw"]
    assert d["scenario"]["count"] == PROFILES["desk"]["count"]


def test_direct_validation():
    with pytest.raises(ValidationError):
        ExperimentConfig(workers=0)
    with pytest.raises(ValidationError):
        ExperimentConfig(demod_trim=0.5)

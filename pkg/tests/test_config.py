import math
from pathlib import Path

import pytest

from hallflux.config import load_config, parse_config
from hallflux.errors import ConfigError

BASE = """\
system = "hmhd"

[grid]
n = 16

[time]
t_end = 0.1

[init]
preset = "zero"
"""


def parse(extra: str = "", base: str = BASE):
    return parse_config(base + extra, "run.toml")


def error_of(text: str) -> str:
    with pytest.raises(ConfigError) as info:
        parse_config(text, "run.toml")
    return str(info.value)


class TestDefaults:
    def test_minimal(self):
        cfg = parse()
        assert (cfg.system, cfg.scheme, cfg.eps, cfg.n) == ("hmhd", "strong", None, 16)
        assert cfg.box == pytest.approx(2 * math.pi) and cfg.dt is None and cfg.dealias
        assert cfg.laws == ["hmhd-energy"] and cfg.windows == ["global"]
        assert cfg.quadrature == "simpson" and cfg.snapshot_every == 10 and cfg.ladder == []

    def test_hash_tracks_text(self):
        assert parse().sha256 == parse().sha256
        assert parse().sha256 != parse("\n").sha256

    def test_radii_in_grid_units(self):
        cfg = parse('[mollifier]\nladder = ["4h", 2.0, "8h"]\n')
        h = 2 * math.pi / 16
        assert cfg.ladder == [4 * h, 2.0, 8 * h]

    def test_regularized_scheme(self):
        cfg = parse('[scheme]\nkind = "regularized"\neps = "4h"\nkernel = "gaussian-truncated"\n')
        assert cfg.eps == pytest.approx(4 * 2 * math.pi / 16) and cfg.kernel == "gaussian-truncated"
        state = cfg.initial_state()
        assert state.regularized and state.eps == cfg.eps

    def test_besov_exponents(self):
        text = BASE.replace("n = 16", "n = 32") + '[besov]\nexponents = [[0.5, 3, "inf"]]\nshells = [1, 2, 3, 4]\n'
        cfg = parse_config(text)
        assert cfg.besov_exponents == [(0.5, 3.0, math.inf)] and cfg.besov_field == "B"

    def test_outside_alpha_needs_no_shells(self):
        assert parse("[besov]\nexponents = [[2.5, 3, 3]]\n").besov_exponents == [(2.5, 3.0, 3.0)]

    def test_mll_preset_params(self):
        text = 'system = "mll"\n[grid]\nn = 16\n[time]\nt_end = 0.1\n[init]\npreset = "perturbed"\nseed = 3\namplitude = 0.2\n'
        cfg = parse_config(text)
        assert cfg.preset_params == {"amplitude": 0.2} and cfg.besov_field == "m"
        assert cfg.initial_state().m.shape == (3, 16, 16, 16)

    def test_output_relative_to_config(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text(BASE + '[output]\ndirectory = "out"\n')
        assert load_config(path).out_dir == tmp_path / "out"


class TestErrors:
    @pytest.mark.parametrize(
        "extra,where",
        [
            ("colour = 3\n", "run.toml:11: init.colour: unknown key"),
            ("[grid2]\nx = 1\n", "run.toml:11: grid2: unknown key"),
            ('[scheme]\nkind = "penalized"\n', "run.toml:12: scheme.kind: expected one of"),
            ('[scheme]\nkind = "regularized"\n', "run.toml:11: scheme.eps: the regularized scheme needs eps"),
            ('[scheme]\nkind = "regularized"\neps = "1h"\n', "run.toml:13: scheme.eps: mollifier radius"),
            ('[scheme]\neps = "4h"\n', "run.toml:12: scheme.eps: eps only applies"),
            ('[diagnostics]\nlaws = ["crossed-helicity"]\n', "run.toml:12: diagnostics.laws: 'crossed-helicity' does not"),
            ('[diagnostics]\nwindows = ["slab"]\n', "run.toml:12: diagnostics.windows: 'slab' is not one of"),
            ('[mollifier]\nladder = ["4x"]\n', "run.toml:12: mollifier.ladder: expected a number or a multiple of h"),
            ('[mollifier]\nladder = ["20h"]\n', "run.toml:12: mollifier.ladder: radius"),
            ("[besov]\nexponents = [[0.5, 3]]\n", "run.toml:12: besov.exponents: expected [alpha, p, r]"),
            ("[besov]\nexponents = [[0.5, 3, 3]]\n", "run.toml:4: grid.n: a Besov profile needs 4 distinct shells"),
            ("[besov]\nexponents = [[0.5, 3, 3]]\nshells = [1, 2, 3]\n", "run.toml:13: besov.shells: multipliers"),
            ("[output]\nsnapshot_every = -1\n", "run.toml:12: output.snapshot_every: expected an integer >= 0"),
        ],
    )
    def test_positions(self, extra, where):
        assert error_of(BASE + extra).startswith(where)

    def test_keys_in_existing_tables(self):
        assert error_of(BASE.replace("n = 16", "n = 12")).startswith("run.toml:4: grid.n:")
        assert error_of(BASE.replace("n = 16", "n = 4")).startswith("run.toml:4: grid.n: expected an integer >= 8")
        assert error_of(BASE.replace("t_end = 0.1", 't_end = "soon"')).startswith("run.toml:7: time.t_end:")
        assert error_of(BASE + "amplitude = 1\nfield_amplitude = 1\n").startswith("run.toml:12: init.field_amplitude:")
        assert error_of(BASE.replace("[time]", "[time]\ndt = -1")).startswith("run.toml:7: time.dt:")

    def test_unknown_top_level(self):
        assert error_of("colour = 3\n" + BASE).startswith("run.toml:1: colour: unknown key")

    def test_missing_required(self):
        assert error_of(BASE.replace('system = "hmhd"\n', "")) == "run.toml: system: required key is missing"
        assert "init.preset: required key is missing" in error_of(BASE.replace('preset = "zero"', "seed = 1"))

    def test_invalid_toml(self):
        assert error_of("system = \n").startswith("run.toml: invalid TOML")

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read config"):
            load_config(Path(tmp_path) / "absent.toml")

    def test_mll_rejects_dealias_switch(self):
        text = 'system = "mll"\n[grid]\nn = 16\n[time]\nt_end = 0.1\n[init]\npreset = "zero"\n[scheme]\ndealias = false\n'
        assert error_of(text).startswith("run.toml:9: scheme.dealias:")

from persuasion.core.config import Settings, get_settings
from persuasion.service.container import get_platform
from persuasion.service.platform_service import PersuasionPlatform
from persuasion.service.simplex_service import PivotRule


def test_settings_defaults():
    s = Settings(_env_file=None)
    assert s.APP_NAME == "persuasion-equilibria"
    assert s.LP_TOL == 1e-9
    assert s.TIE_TOL == 1e-12
    assert s.DEFAULT_GRID == 51
    assert s.DEFAULT_K == 512
    assert s.VERIFY_C1 == 2.0 and s.VERIFY_C2 == 2.0
    assert s.SCAN_STEP == 1e-3
    assert s.PIVOT_RULE == "dantzig"


def test_settings_read_prefixed_environment(monkeypatch):
    monkeypatch.setenv("PERSUASION_LP_TOL", "1e-10")
    monkeypatch.setenv("PERSUASION_PIVOT_RULE", "bland")
    s = Settings(_env_file=None)
    assert s.LP_TOL == 1e-10
    assert s.PIVOT_RULE == "bland"


def test_platform_wires_settings_into_services():
    s = Settings(_env_file=None, PIVOT_RULE="bland", SCAN_STEP=0.01, FIXTURE_PIECES=4)
    platform = PersuasionPlatform(s)
    assert platform.solver.pivot_rule is PivotRule.BLAND
    assert platform.regions.scan_step == 0.01
    assert platform.equilibria.fixture_pieces == 4
    assert platform.analysis.default_K == s.DEFAULT_K
    grid = platform.grid(2)
    assert grid.points_per_axis == 51 and grid.n == 2


def test_get_settings_and_platform_are_cached():
    assert get_settings() is get_settings()
    assert get_platform() is get_platform()

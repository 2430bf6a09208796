from classrecap.config import ServiceConfig, load_config


def test_defaults():
    config = load_config(env={})
    assert config == ServiceConfig()
    assert config.gap_s == 3
    assert config.coverage_quorum == 30
    assert config.volatility_floor == 0.01
    assert config.replay_heat_factor == 2.0


def test_json_file(tmp_path):
    path = tmp_path / "service.json"
    path.write_text('{"port": 9100, "gap_s": 5, "storage_path": "/tmp/x.db"}')
    config = load_config(path, env={})
    assert config.port == 9100
    assert config.gap_s == 5
    assert config.storage_path == "/tmp/x.db"
    assert config.coverage_quorum == 30  # untouched knobs keep defaults


def test_toml_file(tmp_path):
    path = tmp_path / "service.toml"
    path.write_text('port = 9200\nvolatility_floor = 0.02\nreplay_heat_factor = 1.5\n')
    config = load_config(path, env={})
    assert config.port == 9200
    assert config.volatility_floor == 0.02
    assert config.replay_heat_factor == 1.5


def test_env_overrides_file(tmp_path):
    path = tmp_path / "service.json"
    path.write_text('{"port": 9100, "coverage_quorum": 10}')
    config = load_config(
        path,
        env={"CLASSRECAP_PORT": "9999", "CLASSRECAP_GAP_S": "7"},
    )
    assert config.port == 9999  # env wins over file
    assert config.gap_s == 7
    assert config.coverage_quorum == 10  # file still applies where env is silent


def test_cache_key_covers_summary_knobs():
    a = ServiceConfig()
    b = ServiceConfig(gap_s=4)
    assert a.cache_key() != b.cache_key()

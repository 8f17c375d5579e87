import json
import math

import pytest

from detector import DetectorConfig, detect
from errors import ConfigError
from graph_stats import StatisticId
from report_io import (
    REPORT_COLUMNS,
    detection_report_dict,
    dump_json,
    load_flat_config,
    report_rows,
    save_csv,
    save_json,
    timeline_rows,
)
from synthgen import EdgeCountRange, distribution_of, sample_stream, trial_rng, two_block_spec


@pytest.fixture(scope="module")
def small_report():
    d = distribution_of(two_block_spec(12, 2.0, 1.0))
    net = sample_stream(d, EdgeCountRange(150, 300), 20, trial_rng(8))
    cfg = DetectorConfig(statistics=(StatisticId.GED, StatisticId.TP))
    return net, detect(net, cfg)


class TestFlatConfig:
    def test_comments_and_dashes(self, tmp_path):
        path = tmp_path / "a.conf"
        path.write_text("# header\n\nmax-elements = 5   # cap\nnull = learning:1..9\n", encoding="utf-8")
        assert load_flat_config(path) == {"max_elements": "5", "null": "learning:1..9"}

    def test_missing_equals(self, tmp_path):
        path = tmp_path / "a.conf"
        path.write_text("alpha = 0.1\nverbose\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="line 2"):
            load_flat_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_flat_config(tmp_path / "none.conf")


class TestFiles:
    def test_json_layout(self, tmp_path):
        path = tmp_path / "sub" / "x.json"
        save_json({"b": [1, 2], "a": "é"}, path)
        text = path.read_text(encoding="utf-8")
        assert text.endswith("}\n")
        assert "é" in text
        assert json.loads(text) == {"b": [1, 2], "a": "é"}
        assert dump_json(json.loads(text)) == text

    def test_json_rejects_nan(self):
        with pytest.raises(ValueError):
            dump_json({"z": math.nan})

    def test_csv_values(self, tmp_path):
        path = tmp_path / "rows.csv"
        save_csv([{"a": None, "b": True, "c": 1.5, "extra": 0}], ("a", "b", "c"), path)
        assert path.read_text(encoding="utf-8") == "a,b,c\n,1,1.5\n"


class TestReportPayloads:
    def test_flagged_lists_match_report(self, small_report):
        net, report = small_report
        payload = detection_report_dict(report, net)
        assert payload["config"]["statistics"] == ["GED", "TP"]
        assert payload["network"]["n_snapshots"] == 20
        for entry, stat in zip(payload["statistics"], (StatisticId.GED, StatisticId.TP)):
            assert entry["flagged"] == list(report.flagged(stat))
            assert entry["null"] is None
            assert len(entry["rows"]) == len(report[stat].rows)
        dump_json(payload)

    def test_report_rows(self, small_report):
        _, report = small_report
        rows = report_rows(report)
        assert len(rows) == 19 + 20
        assert all(set(REPORT_COLUMNS) <= set(row) for row in rows)

    def test_timeline_order(self, small_report):
        _, report = small_report
        rows = timeline_rows(report)
        assert rows[0]["t"] == 0 and rows[0]["statistic"] == "TP"
        assert [r["statistic"] for r in rows[1:3]] == ["GED", "TP"]
        assert [r["t"] for r in rows] == sorted(r["t"] for r in rows)

    def test_flag_rate(self, small_report):
        _, report = small_report
        tp = report[StatisticId.TP]
        assert tp.flag_rate == pytest.approx(len(tp.flagged_times) / len(tp.rows))

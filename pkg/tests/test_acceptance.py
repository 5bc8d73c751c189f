"""Full-size training runs on the synthetic movie KG; run with --runslow."""
import time

import pytest

from utils.csvWriter import readCsv
from vrnReasoner import main


def _pipeline(outDir, labelFraction, hops=1):
    base = ["--out", str(outDir), "--seed", "0", "--hops", str(hops), "--label-fraction", str(labelFraction)]
    assert main(["gen-data"] + base) == 0
    start = time.perf_counter()
    for command in ("train", "eval"):
        assert main([command] + base) == 0, command
    elapsed = time.perf_counter() - start
    return {row["model"]: row for row in readCsv(outDir / "metrics.csv")}, elapsed


@pytest.mark.slow
class TestTrainingQuality:

    def test_fully_labeled_one_hop(self, tmp_path):
        rows, elapsed = _pipeline(tmp_path, 1.0)
        assert rows["vrn"]["regime"] == "vanilla"
        assert float(rows["vrn"]["hits_at_1"]) >= 0.95
        assert float(rows["vrn"]["hits_at_1"]) > float(rows["supervised_embedding"]["hits_at_1"])
        assert elapsed <= 5 * 60

    @pytest.mark.parametrize("hops, threshold", [(2, 0.80), (3, 0.50)])
    def test_fully_labeled_multi_hop(self, tmp_path, hops, threshold):
        rows, elapsed = _pipeline(tmp_path, 1.0, hops=hops)
        assert rows["vrn"]["regime"] == "vanilla"
        assert rows["vrn"]["hop"] == str(hops)
        assert float(rows["vrn"]["hits_at_1"]) >= threshold
        assert elapsed <= 20 * 60

    def test_few_labels_improve_recognizer_and_beat_baseline(self, tmp_path):
        rows, _ = _pipeline(tmp_path, 0.05)
        assert rows["vrn"]["regime"] == "eu"
        assert float(rows["vrn"]["entity_accuracy"]) > float(rows["vrn_pretrain"]["entity_accuracy"])
        assert float(rows["vrn"]["hits_at_1"]) > float(rows["supervised_embedding"]["hits_at_1"])

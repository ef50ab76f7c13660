# Copyright 2026 spinspectra Contributors

# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at

#      http://www.apache.org/licenses/LICENSE-2.0

# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import csv
import io
import json
import math

import pytest

from spinspectra.analysis import EPSILON_FLOOR
from spinspectra.config import Regime, RunConfig, parse_presets
from spinspectra.io import load_molecule
from spinspectra.studies import bench, converge

HIGH = Regime("high", "high")


def test_converge_against_the_exact_spectrum(molecules_dir):
    system = load_molecule(molecules_dir / "ethyl_fragment.json")
    report = converge(system, [1, 3, 5], [HIGH])
    assert report.reference == "exact"
    methods = [(row.method, row.max_cluster) for row in report.rows]
    assert methods == [("exact", 5), ("cluster", 1), ("cluster", 3), ("cluster", 5)]
    reference = report.rows[0]
    assert reference.reference
    assert reference.epsilon == EPSILON_FLOOR
    assert reference.cos_theta == 1.0
    assert not any(row.reference for row in report.rows[1:])
    assert report.rows[-1].epsilon <= -10
    assert report.rows[1].epsilon > report.rows[-1].epsilon
    assert all(row.regime == "high:high" and row.field_mhz == 400.0 and row.fwhm_hz == 1.0 for row in report.rows)
    assert all(row.seconds >= 0 for row in report.rows)
    assert report.rows[0].diagonalizations is None
    assert report.rows[1].diagonalizations == 5


@pytest.mark.parametrize("name", ["uncoupled_six", "tbutyl_chloride_like"])
def test_uncoupled_molecules_converge_at_size_one(molecules_dir, name):
    system = load_molecule(molecules_dir / f"{name}.json")
    report = converge(system, [1], [HIGH])
    assert report.rows[1].epsilon <= -10


def test_converge_falls_back_to_the_largest_cluster(molecules_dir):
    system = load_molecule(molecules_dir / "ethyl_fragment.json")
    report = converge(system, [2, 1, 4], [HIGH], RunConfig(exact_threshold=3))
    assert report.reference == "cluster"
    assert [row.max_cluster for row in report.rows] == [1, 2, 4]
    assert all(row.method == "cluster" for row in report.rows)
    assert report.rows[-1].reference
    assert report.rows[-1].epsilon == EPSILON_FLOOR
    assert report.rows[0].epsilon > EPSILON_FLOOR


def test_converge_over_several_regimes_keeps_spectra(molecules_dir):
    system = load_molecule(molecules_dir / "ax_pair.json")
    regimes = parse_presets("high:high,low:low")
    report = converge(system, [1, 2], regimes, keep_spectra=True)
    assert len(report.rows) == 6
    assert len(report.rows_for("low:low")) == 3
    assert [row.field_mhz for row in report.rows_for("low:low")] == [80.0] * 3
    assert set(report.spectra) == {(r, s) for r in ("high:high", "low:low") for s in ("exact", "1", "2")}
    assert all(spectrum.normalized and spectrum.axis == "ppm" for spectrum in report.spectra.values())


def test_converge_rejects_bad_sizes(molecules_dir):
    system = load_molecule(molecules_dir / "ax_pair.json")
    with pytest.raises(ValueError):
        converge(system, [], [HIGH])
    with pytest.raises(ValueError, match="outside"):
        converge(system, [0, 1], [HIGH])
    with pytest.raises(ValueError, match="outside"):
        converge(system, [3], [HIGH])


def test_convergence_report_outputs(molecules_dir):
    system = load_molecule(molecules_dir / "ax_pair.json")
    report = converge(system, [1, 2], [HIGH])
    text = report.to_csv()
    assert text.startswith("# spinspectra ")
    rows = list(csv.DictReader(io.StringIO(text.split("\n", 1)[1])))
    assert len(rows) == 3
    assert rows[0]["method"] == "exact"
    assert float(rows[0]["epsilon"]) == EPSILON_FLOOR
    assert rows[1]["distinct_clusters"] == "2"
    document = json.loads(report.to_json())
    assert document["reference"] == "exact"
    assert [row["max_cluster"] for row in document["rows"]] == [2, 1, 2]


def test_bench_rows(molecules_dir):
    system = load_molecule(molecules_dir / "isobutyronitrile_like.json")
    report = bench(system, [7, 1, 3], repeats=2)
    assert report.num_nuclei == 7
    assert [row.max_cluster for row in report.rows] == [1, 3, 7]
    for row in report.rows:
        assert row.repeats == 2
        assert 0 <= row.min_seconds <= row.median_seconds
        assert row.predicted_sector == math.comb(row.max_cluster, row.max_cluster // 2)
        assert row.largest_sector <= row.predicted_sector
        assert row.peak_memory_bytes == 16 * row.largest_sector ** 2
        assert row.clusters == 7
        assert row.dedup_savings == row.clusters - row.distinct_clusters
    assert report.rows[0].dedup_savings == 0
    full = report.rows[-1]
    assert full.distinct_clusters == 1
    assert full.diagonalizations == 1
    assert full.dedup_savings == 6
    assert full.largest_sector == math.comb(7, 3)


def test_bench_report_outputs(molecules_dir):
    system = load_molecule(molecules_dir / "ax_pair.json")
    report = bench(system, [1, 2], repeats=1)
    lines = report.to_csv().splitlines()
    assert lines[1].startswith("max_cluster,repeats,median_seconds")
    assert len(lines) == 4
    assert json.loads(report.to_json())["num_nuclei"] == 2
    with pytest.raises(ValueError):
        bench(system, [1], repeats=0)


@pytest.mark.parametrize("name", ["crotonaldehyde_like", "propane_like", "styrene_like", "ethyl_acetate_like"])
def test_convergence_is_best_at_full_size_and_slower_with_narrow_lines(molecules_dir, name):
    system = load_molecule(molecules_dir / f"{name}.json")
    sizes = list(range(1, system.num_nuclei + 1))
    broad, narrow = Regime("low", "high"), Regime("low", "low")
    report = converge(system, sizes, [broad, narrow], RunConfig(threads=1))
    for regime in (broad, narrow):
        errors = [row.epsilon for row in report.rows_for(regime.name) if row.method == "cluster"]
        assert errors[-1] <= -10
        # a smaller cluster may only tie with the full one when it is itself exact
        assert all(e >= errors[-1] or e <= -10 for e in errors)
    broad_errors = [row.epsilon for row in report.rows_for(broad.name) if row.method == "cluster"]
    narrow_errors = [row.epsilon for row in report.rows_for(narrow.name) if row.method == "cluster"]
    for wide, thin in zip(broad_errors, narrow_errors):
        if wide > -8:
            assert thin >= wide - 0.5

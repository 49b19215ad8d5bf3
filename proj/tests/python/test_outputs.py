"""Output contract checks for the critpop CLI: schemas, CSV layout, exit codes
and seed precedence. These are the formats the plotting scripts consume."""

import argparse
import csv
import json
import os
import shutil
import subprocess
import sys
import unittest
from pathlib import Path

import jsonschema

ARGS = None


def load(path):
    with open(path) as f:
        return json.load(f)


def read_csv(path):
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    return rows[0], [[float(v) for v in r] for r in rows[1:]]


class Fixture(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.root = Path(ARGS.root)
        cls.tool = ARGS.tool
        cls.work = Path(ARGS.work)
        cls.work.mkdir(parents=True, exist_ok=True)
        cls.summary_schema = load(cls.root / "schema" / "summary.schema.json")
        cls.config_schema = load(cls.root / "schema" / "config.schema.json")

    def run_tool(self, task, config, out, *extra, env=None):
        if out.exists():
            shutil.rmtree(out)
        full_env = {k: v for k, v in os.environ.items() if k != "CRITPOP_SEED"}
        full_env.update(env or {})
        return subprocess.run(
            [self.tool, task, "--config", str(config), "--out", str(out), *extra],
            capture_output=True, text=True, env=full_env)

    def write_config(self, name, doc):
        path = self.work / name
        path.write_text(json.dumps(doc))
        return path

    def check_csv(self, path):
        header, rows = read_csv(path)
        self.assertEqual(header[0], "t")
        self.assertGreater(len(rows), 1)
        times = [r[0] for r in rows]
        self.assertTrue(all(b > a for a, b in zip(times, times[1:])), f"{path}: t not increasing")
        self.assertTrue(all(len(r) == len(header) for r in rows))
        return header, rows


class ShippedConfigs(Fixture):
    def test_configs_validate_and_run(self):
        for config in sorted((self.root / "configs").glob("*.json")):
            with self.subTest(config=config.name):
                doc = load(config)
                jsonschema.validate(doc, self.config_schema)
                out = self.work / ("run_" + config.stem)
                proc = self.run_tool(doc["task"], config, out)
                self.assertEqual(proc.returncode, 0, proc.stderr)
                summary = load(out / "summary.json")
                jsonschema.validate(summary, self.summary_schema)
                self.assertEqual(summary["task"], doc["task"])
                self.assertEqual(summary["status"], "ok")
                for csv_path in out.rglob("*.csv"):
                    self.check_csv(csv_path)

    def test_logistic_running_average_reaches_boundary_mean(self):
        out = self.work / "logistic"
        proc = self.run_tool("simulate", self.root / "configs" / "logistic_simulate.json", out)
        self.assertEqual(proc.returncode, 0, proc.stderr)
        header, rows = self.check_csv(out / "replicate_0.csv")
        self.assertAlmostEqual(rows[-1][header.index("avg_x")], 2.0, delta=0.1)

    def test_sirs_threshold_values(self):
        out = self.work / "sirs_threshold"
        proc = self.run_tool("threshold", self.root / "configs" / "sirs_threshold.json", out)
        self.assertEqual(proc.returncode, 0, proc.stderr)
        r = load(out / "summary.json")["results"]
        self.assertAlmostEqual(r["value"], 1.0, places=12)
        self.assertAlmostEqual(r["pi_h"], -1.0, places=12)
        self.assertEqual(r["standard_error"], 0.0)
        self.assertEqual(r["method"], "closed-form")

    def test_patchy_couple_has_no_violations(self):
        out = self.work / "patchy_couple"
        proc = self.run_tool("couple", self.root / "configs" / "patchy_couple.json", out)
        self.assertEqual(proc.returncode, 0, proc.stderr)
        self.assertEqual(load(out / "summary.json")["results"]["violations"], 0)

    def test_runs_are_byte_identical(self):
        config = self.root / "configs" / "patchy_couple.json"
        a, b = self.work / "det_a", self.work / "det_b"
        self.assertEqual(self.run_tool("couple", config, a).returncode, 0)
        self.assertEqual(self.run_tool("couple", config, b, "--jobs", "2").returncode, 0)
        files = sorted(p.name for p in a.glob("*.csv"))
        self.assertTrue(files)
        for name in files:
            self.assertEqual((a / name).read_bytes(), (b / name).read_bytes())
        sa, sb = load(a / "summary.json"), load(b / "summary.json")
        sa.pop("wall_clock_seconds")
        sb.pop("wall_clock_seconds")
        self.assertEqual(sa, sb)


class Samples(Fixture):
    def test_sample_csvs_follow_the_contract(self):
        header, rows = self.check_csv(self.root / "samples" / "logistic_simulate.csv")
        self.assertEqual(header, ["t", "x", "y", "extinction", "avg_x", "avg_y", "avg_extinction"])
        self.assertAlmostEqual(rows[-1][header.index("avg_x")], 2.0, delta=0.1)
        header, _ = self.check_csv(self.root / "samples" / "patchy_couple.csv")
        self.assertEqual(header, ["t", "log_s", "log_s_bar", "log_s_tilde"])

    def test_sample_summaries_validate(self):
        for path in sorted((self.root / "samples").glob("*.summary.json")):
            with self.subTest(sample=path.name):
                jsonschema.validate(load(path), self.summary_schema)

    def test_sweep_sample_crosses_zero_at_beta_one(self):
        points = load(self.root / "samples" / "sirs_beta_sweep.summary.json")["points"]
        values = [(p["parameter_value"], p["results"]["value"]) for p in points]
        self.assertTrue(all(b[1] > a[1] for a, b in zip(values, values[1:])))
        at_one = [v for beta, v in values if beta == 1.0]
        self.assertEqual(len(at_one), 1)
        self.assertAlmostEqual(at_one[0], 0.0, places=12)


class Negative(Fixture):
    def test_summary_schema_rejects_broken_documents(self):
        good = load(self.root / "samples" / "logistic_simulate.summary.json")
        for mutate in (lambda d: d.pop("results"), lambda d: d.update(status="maybe"),
                       lambda d: d.update(task="dance"), lambda d: d.pop("seed")):
            doc = json.loads(json.dumps(good))
            mutate(doc)
            with self.assertRaises(jsonschema.ValidationError):
                jsonschema.validate(doc, self.summary_schema)

    def test_bad_config_exits_1_with_every_violation(self):
        doc = load(self.root / "configs" / "sirs_threshold.json")
        doc["sim"]["dt"] = 0
        doc["sim"]["replicates"] = 0
        with self.assertRaises(jsonschema.ValidationError):
            jsonschema.validate(doc, self.config_schema)
        proc = self.run_tool("threshold", self.write_config("bad.json", doc), self.work / "bad")
        self.assertEqual(proc.returncode, 1)
        self.assertIn("critpop: error:", proc.stderr)
        self.assertIn("sim.dt must be > 0", proc.stderr)
        self.assertIn("sim.replicates", proc.stderr)

    def test_failed_verdict_exits_2(self):
        doc = load(self.root / "configs" / "seir_critical_experiment.json")
        doc["sim"]["horizon"] = 1000
        doc["sim"]["replicates"] = 2
        doc["options"]["rules"] = {"ceiling": 1e-9}
        out = self.work / "fail"
        proc = self.run_tool("experiment", self.write_config("fail.json", doc), out)
        self.assertEqual(proc.returncode, 2, proc.stderr)
        summary = load(out / "summary.json")
        jsonschema.validate(summary, self.summary_schema)
        self.assertEqual(summary["results"]["verdict"], "FAIL")


class Seeds(Fixture):
    def seed_of(self, out, *extra, env=None):
        proc = self.run_tool("threshold", self.root / "configs" / "sis_switching_threshold.json",
                             out, *extra, env=env)
        self.assertEqual(proc.returncode, 0, proc.stderr)
        return load(out / "summary.json")["seed"]

    def test_seed_precedence(self):
        self.assertEqual(self.seed_of(self.work / "seed_cfg"), 3)
        self.assertEqual(self.seed_of(self.work / "seed_env", env={"CRITPOP_SEED": "11"}), 11)
        self.assertEqual(self.seed_of(self.work / "seed_flag", "--seed", "13",
                                      env={"CRITPOP_SEED": "11"}), 13)


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--tool", required=True)
    parser.add_argument("--root", required=True)
    parser.add_argument("--work", required=True)
    ARGS, rest = parser.parse_known_args()
    unittest.main(argv=[sys.argv[0], *rest], verbosity=2)

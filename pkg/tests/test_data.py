import os
import shutil
import tempfile
import unittest

import numpy as np
import pandas as pd

from termsv.data import (DEFAULT_SCHEDULE, MaturitySchedule, PanelData,
                         build_maturity_schedule, load_panel, load_schedule,
                         save_panel, simulate_panel, term_structure_stats)
from termsv.exceptions import DataError, InsufficientDataError, LoadError
from termsv.model import ModelSpec, Params


def svensson():
    return Params(ModelSpec(4, True), (0.0036, 0.0158), 0.0032, nu=24.0,
                  beta0=[4.0, -0.1, 0.05, 0.02], Sigma0=0.01 * np.eye(4))


class TestSchedule(unittest.TestCase):
    def test_rollover_count(self):
        dates = pd.bdate_range("1990-01-01", periods=5118)
        maturities, flags = build_maturity_schedule(MaturitySchedule(22, 30, 21, 7), dates, 2)
        self.assertEqual(int(flags.sum()), 244)
        self.assertFalse(flags[0])
        self.assertTrue(flags[14])
        self.assertTrue(np.all(maturities > 0))

    def test_maturities(self):
        dates = pd.bdate_range("2000-01-03", periods=5)
        maturities, flags = build_maturity_schedule(DEFAULT_SCHEDULE, dates, 3)
        np.testing.assert_array_equal(flags, [False, True, False, False, False])
        np.testing.assert_array_equal(maturities[:, 0], [22, 51, 50, 49, 48])
        np.testing.assert_array_equal(maturities[0], [22, 52, 82])

    def test_invalid(self):
        self.assertRaises(DataError, MaturitySchedule, 0, 30, 21)
        self.assertRaises(DataError, MaturitySchedule, 22, 30, 21, -1)
        dates = pd.DatetimeIndex(["2000-01-04", "2000-01-03"])
        self.assertRaises(DataError, build_maturity_schedule, DEFAULT_SCHEDULE, dates)
        self.assertRaises(DataError, build_maturity_schedule,
                          MaturitySchedule(1, 30, 21), pd.bdate_range("2000-01-03", periods=3))


class TestPanelData(unittest.TestCase):
    def test_checks(self):
        dates = pd.bdate_range("2000-01-03", periods=2)
        ok = np.ones((2, 3))
        PanelData(dates, ok, ok, [False, False])
        self.assertRaises(DataError, PanelData, dates, [[1.0, np.nan]] * 2,
                          np.ones((2, 2)), [False, False])
        self.assertRaises(DataError, PanelData, dates, ok, np.zeros((2, 3)), [False, False])
        self.assertRaises(DataError, PanelData, dates, ok, np.ones((2, 2)), [False, False])
        self.assertRaises(DataError, PanelData, dates, ok, ok, [False])

    def test_slice(self):
        panel, _ = simulate_panel(svensson(), T=30, N=5, seed=1)
        part = panel.slice(0, 10)
        self.assertEqual((part.T, part.N), (10, 5))
        np.testing.assert_array_equal(part.prices, panel.prices[:10])
        self.assertEqual(panel.loadings(svensson().lambdas, 4).shape, (30, 5, 4))


class TestFiles(unittest.TestCase):
    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmpdir)

    def path(self, name):
        return os.path.join(self.tmpdir, name)

    def write(self, name, text):
        with open(self.path(name), "w") as fd:
            fd.write(text)
        return self.path(name)

    def test_save_and_load(self):
        panel, _ = simulate_panel(svensson(), T=25, N=4, seed=2)
        save_panel(panel, self.path("panel.csv"), DEFAULT_SCHEDULE, header=["termsv test"])
        loaded = load_panel(self.path("panel.csv"))
        np.testing.assert_allclose(loaded.prices, panel.prices, rtol=1e-9)
        np.testing.assert_array_equal(loaded.maturities, panel.maturities)
        np.testing.assert_array_equal(loaded.rollover_flags, panel.rollover_flags)
        self.assertEqual(load_schedule(self.path("panel.schedule")), DEFAULT_SCHEDULE)

    def test_schedule_sidecar(self):
        path = self.write("raw.csv", "date,contract,price\n"
                                     "2000-01-03,1,100\n2000-01-03,2,101\n"
                                     "2000-01-04,1,102\n2000-01-04,2,103\n")
        self.write("raw.schedule", "# monthly\nbase_maturity_days=22\n"
                                   "contract_spacing_days=30\nrollover_period_days=21\n"
                                   "rollover_offset_days=20\n")
        panel = load_panel(path)
        self.assertAlmostEqual(panel.prices[1, 0], np.log(102.0))
        np.testing.assert_array_equal(panel.maturities, [[22, 52], [51, 81]])
        np.testing.assert_array_equal(panel.rollover_flags, [False, True])

    def test_no_schedule(self):
        path = self.write("raw.csv", "date,contract,price\n2000-01-03,1,100\n")
        self.assertRaises(LoadError, load_panel, path)

    def test_missing_cell(self):
        path = self.write("holes.csv", "date,contract,log_price,maturity_days\n"
                                       "2000-01-03,1,4.0,20\n2000-01-03,2,4.1,50\n"
                                       "2000-01-04,1,4.0,19\n")
        with self.assertRaises(LoadError) as context:
            load_panel(path)
        self.assertEqual(str(context.exception.date), "2000-01-04")
        self.assertEqual(context.exception.contract, 2)

    def test_duplicates(self):
        path = self.write("dups.csv", "date,contract,log_price,maturity_days\n"
                                      "2000-01-03,1,4.0,20\n2000-01-03,1,4.1,20\n")
        self.assertRaises(LoadError, load_panel, path)

    def test_invalid_values(self):
        path = self.write("bad.csv", "date,contract,price,maturity_days\n"
                                     "2000-01-03,1,-4.0,20\n")
        self.assertRaises(DataError, load_panel, path)
        path = self.write("cols.csv", "date,price\n2000-01-03,4.0\n")
        self.assertRaises(LoadError, load_panel, path)
        self.assertRaises(LoadError, load_panel, self.path("missing.csv"))


class TestStatistics(unittest.TestCase):
    def test_term_structure_stats(self):
        panel, _ = simulate_panel(svensson(), T=50, N=3, seed=3)
        stats = term_structure_stats(panel)
        self.assertEqual(list(stats.columns),
                         ["contract", "mean_all", "var_all", "mean_rollover",
                          "var_rollover", "mean_after", "var_after"])
        np.testing.assert_allclose(stats["mean_all"], panel.prices.mean(axis=0))
        rolls = panel.prices[panel.rollover_flags]
        np.testing.assert_allclose(stats["var_rollover"], rolls.var(axis=0, ddof=1))

    def test_too_few_rollovers(self):
        panel, _ = simulate_panel(svensson(), T=10, N=3, seed=3)
        self.assertRaises(InsufficientDataError, term_structure_stats, panel)


class TestSimulation(unittest.TestCase):
    def test_shapes(self):
        panel, state = simulate_panel(svensson(), T=40, N=6, seed=4)
        self.assertEqual(panel.prices.shape, (40, 6))
        self.assertEqual(state.beta.shape, (41, 4))
        self.assertEqual(state.H.shape, (40, 4, 4))
        self.assertEqual(state.Sigma_filter.shape, (40, 4, 4))
        np.testing.assert_array_equal(state.beta[0], [4.0, -0.1, 0.05, 0.02])

    def test_reproducible(self):
        first, _ = simulate_panel(svensson(), T=10, N=3, seed=5)
        second, _ = simulate_panel(svensson(), T=10, N=3, seed=5)
        np.testing.assert_array_equal(first.prices, second.prices)

    def test_no_sv(self):
        params = Params(ModelSpec(3, False), (0.01,), 0.003, Sigma0=1e-4 * np.eye(3))
        panel, state = simulate_panel(params, T=10, N=4, seed=6)
        self.assertIsNone(state.H)
        self.assertEqual(panel.N, 4)


if __name__ == "__main__":
    unittest.main()

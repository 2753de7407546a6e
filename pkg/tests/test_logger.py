import unittest

from io import StringIO

from termsv.exceptions import DomainError
from termsv.logger import Logger, silent


class TestLogger(unittest.TestCase):
    def setUp(self):
        self.output = StringIO()
        self.manager = Logger()
        self.manager.set_output(self.output)
        self.logger = self.manager.new_module("test")

    def test_level(self):
        self.logger.debug("test")
        self.assertEqual(self.output.tell(), 0)
        self.manager.set_level("debug")
        self.logger.debug("test")
        self.assertNotEqual(self.output.tell(), 0)

    def test_output(self):
        self.manager.set_level("debug")
        self.logger.debug("test")
        self.assertEqual(self.output.getvalue(), "[test][debug] test\n")

    def test_format_args(self):
        self.manager.set_level("info")
        self.logger.info("cycle {0} of {total}", 3, total=10)
        self.assertEqual(self.output.getvalue(), "[test][info] cycle 3 of 10\n")

    def test_submodule(self):
        self.manager.set_level("warning")
        self.logger.new_module("chain").warning("slow")
        self.assertEqual(self.output.getvalue(), "[test.chain][warning] slow\n")

    def test_enabled(self):
        self.manager.set_level("info")
        self.assertTrue(self.logger.enabled("info"))
        self.assertFalse(self.logger.enabled("debug"))

    def test_level_names(self):
        self.manager.set_level("INFO")
        self.assertTrue(self.logger.enabled("info"))
        self.manager.set_level(2)
        self.assertFalse(self.logger.enabled("info"))
        self.assertRaises(DomainError, self.manager.set_level, "verbose")
        self.assertTrue(self.logger.enabled("warning"))

    def test_literal_braces(self):
        self.manager.set_level("info")
        self.logger.info("lambda in {0.001, 0.01}")
        self.assertEqual(self.output.getvalue(), "[test][info] lambda in {0.001, 0.01}\n")

    def test_timed(self):
        self.manager.set_level("info")
        with self.logger.timed("Chain"):
            pass
        self.assertRegex(self.output.getvalue(), r"^\[test\]\[info\] Chain took \d+\.\d\d s\n$")

    def test_timed_failure(self):
        self.manager.set_level("debug")
        with self.assertRaises(ValueError):
            with self.logger.timed("Chain"):
                raise ValueError("diverged")
        self.assertEqual(self.output.getvalue(), "")

    def test_silent(self):
        logger = silent("quiet")
        self.assertFalse(logger.enabled("error"))


if __name__ == "__main__":
    unittest.main()

import hashlib
import os
import shutil
import tempfile
import unittest

import pandas as pd

from termsv import __version__
from termsv.exceptions import DataError
from termsv.io import (file_digest, provenance, read_provenance, write_table,
                       write_text)


class TestProvenance(unittest.TestCase):
    def setUp(self):
        self.tmpdir = tempfile.mkdtemp()
        self.input = os.path.join(self.tmpdir, "panel.csv")
        with open(self.input, "wb") as fd:
            fd.write(b"date,contract,price\n")

    def tearDown(self):
        shutil.rmtree(self.tmpdir)

    def test_digest(self):
        expected = hashlib.sha256(b"date,contract,price\n").hexdigest()
        self.assertEqual(file_digest(self.input), expected)
        self.assertRaises(DataError, file_digest, os.path.join(self.tmpdir, "missing"))

    def test_header(self):
        header = provenance("termsv estimate panel.csv", seed=3, inputs=[self.input],
                            model="4F-SV")
        self.assertEqual(header[0], "termsv {0}".format(__version__))
        self.assertIn("seed: 3", header)
        self.assertIn("model: 4F-SV", header)
        # identical on reruns
        self.assertEqual(header, provenance("termsv estimate panel.csv", seed=3,
                                            inputs=[self.input], model="4F-SV"))

    def test_table(self):
        path = os.path.join(self.tmpdir, "dic.csv")
        header = provenance("termsv dic", seed=1)
        write_table(pd.DataFrame({"model": ["4F-SV"], "dic": [1.5]}), path, header)

        values = read_provenance(path)
        self.assertEqual(values["version"], __version__)
        self.assertEqual(values["command"], "termsv dic")
        self.assertEqual(values["seed"], "1")

        frame = pd.read_csv(path, comment="#")
        self.assertEqual(list(frame.columns), ["model", "dic"])
        self.assertEqual(frame["dic"][0], 1.5)

    def test_text(self):
        path = os.path.join(self.tmpdir, "params.txt")
        write_text("m=3\n", path, ["termsv simulate"])
        with open(path) as fd:
            self.assertEqual(fd.read(), "# termsv simulate\nm=3\n")


if __name__ == "__main__":
    unittest.main()

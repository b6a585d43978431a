# -*- coding: UTF-8 -*-
import csv
import io

import numpy as np

from splitfeas.utils.csv_utils import ExactWriter


class TestExactWriter:
    def test_writerow(self):
        # given
        f = io.StringIO()
        w = ExactWriter(f)

        # when
        w.writerow(["k", "value", "missing"])
        w.writerow([3, 0.1, None])

        # then
        assert f.getvalue() == "k,value,missing\n3,0.1,\n"

    def test_encode_keeps_every_digit(self):
        assert ExactWriter.encode(1.0 / 3.0) == "0.3333333333333333"
        assert ExactWriter.encode(float("inf")) == "inf"

    def test_encode_numpy_scalars(self):
        assert ExactWriter.encode(np.float64(2.5)) == "2.5"
        assert ExactWriter.encode(np.int64(7)) == "7"
        assert ExactWriter.encode(np.bool_(True)) == "true"

    def test_encode_bool(self):
        assert ExactWriter.encode(False) == "false"

    def test_writerows(self):
        f = io.StringIO()
        ExactWriter(f).writerows([[1, 2.0], [2, None]])
        assert f.getvalue() == "1,2.0\n2,\n"

    def test_cells_read_back_exactly(self):
        values = [0.1 + 0.2, 1e-300, -2.0 / 3.0]
        f = io.StringIO()
        ExactWriter(f).writerow(values + [None])
        cells = next(csv.reader(io.StringIO(f.getvalue())))
        assert [float(c) for c in cells[:-1]] == values
        assert cells[-1] == ""

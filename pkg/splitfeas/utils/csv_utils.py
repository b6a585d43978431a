#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
#
import csv

# A CSV writer whose float cells read back bit-identically: floats are written
# with repr, missing values as empty cells.


class ExactWriter(object):
    def __init__(self, f, dialect="excel", **kwds):
        self.stream = f
        self.writer = csv.writer(
            self.stream, dialect=dialect, lineterminator="\n", **kwds
        )

    @staticmethod
    def encode(data):
        if data is None:
            return ""
        if isinstance(data, bool):
            return str(data).lower()
        if isinstance(data, float):
            return repr(float(data))
        if isinstance(data, int):
            return str(data)
        # numpy scalars
        if hasattr(data, "item"):
            return ExactWriter.encode(data.item())
        return data

    def writerow(self, row):
        self.writer.writerow([self.encode(s) for s in row])

    def writerows(self, rows):
        for row in rows:
            self.writerow(row)


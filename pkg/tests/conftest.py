import numpy as np
import pytest

from clonesift.corpus import CorpusManifest, FunctionUnit
from clonesift.embed import EmbeddingRecord

TWO_FUNCTIONS_C = """\
#include <math.h>

int add(int a, int b) {
    int sum = a + b;
    return sum;
}

double hypot2(double x, double y)
{
    double xx = x * x;
    double yy = y * y;
    return sqrt(xx + yy);
}
"""

UNRELATED_FN = """\
void shuffle_bytes(char *buf, int n) {
    for (int i = 0; i < n; i++) {
        buf[i] ^= 0x5c;
    }
}
"""

RENAMED_FN = """\
int add(int left, int right) {
    int total = left + right;
    return total;
}
"""


def make_unit(path="f.c", start=1, end=4, text="int f(void) {\n  return 1;\n}\n"):
    return FunctionUnit(path=path, start_line=start, end_line=end, text=text)


@pytest.fixture
def four_unit_corpus():
    """Two well-separated near-duplicate pairs, with hand-built vectors."""
    units = [
        make_unit("a.c", 1, 4, "int a1(int x) { return x + 1; }"),
        make_unit("a.c", 6, 9, "int a2(int x) { return x + 2; }"),
        make_unit("b.c", 1, 4, "void b1(char *s) { puts(s); }"),
        make_unit("b.c", 6, 9, "void b2(char *s) { puts(s); puts(s); }"),
    ]
    vectors = np.array([
        [1.0, 0.05, 0.0, 0.0],
        [0.99, 0.0, 0.05, 0.0],
        [0.0, 0.0, 1.0, 0.08],
        [0.0, 0.05, 0.98, 0.0],
    ])
    records = [
        EmbeddingRecord(unit_id=u.id, model_id="fix", vector=tuple(v))
        for u, v in zip(units, vectors)
    ]
    manifest = CorpusManifest(label="four", language="c", units=tuple(units))
    return manifest, records

"""Recover the layer widths of a network from its singular sheets.

First-layer sheets are linear in the weights and group into d2 batches of
columns over d1 sources; deeper sheets are multilinear with one extra layer
of variables each. Counting monomial support layer by layer reads off the
full width vector.
"""

from fractions import Fraction as F

from losscarto import (
    NetworkShape,
    TrainingSample,
    enumerate_singular_sheets,
    recover_architecture,
)

for widths, samples in [
    ([2, 2, 1], [TrainingSample((F(1), F(2)), (F(1),))]),
    (
        [3, 3, 2, 1],
        [
            TrainingSample((F(1), F(2), F(3)), (F(1),)),
            TrainingSample((F(2), F(-1), F(1)), (F(0),)),
        ],
    ),
]:
    s = NetworkShape(widths)
    sheets = enumerate_singular_sheets(s, samples, 200, seed=1)
    recovered = recover_architecture([sh.poly for sh in sheets])
    print(f"true widths {tuple(widths)}  ->  recovered {recovered}  "
          f"(from {len(sheets)} sheets)")

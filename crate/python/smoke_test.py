"""Smoke test for the fielddev_py extension module.

Build the module and put it on the path first, for example:

    cargo build --release -p fielddev-py
    cp target/release/libfielddev_py.so python/fielddev_py.so
    python3 python/smoke_test.py
"""

import json
import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import fielddev_py as fd


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    region = fd.IndexRegion.square(10)
    table = fd.WeightTable.build(fd.CoefficientField.delta(), region)
    assert table.sigma2 == 100.0
    agg = table.aggregates([4.0])
    assert close(agg["rho2"], 0.01, 1e-15)
    assert close(agg["entries"][0]["u"], 0.01, 1e-15)

    pred = fd.moderate_prediction(table, 3.0, 4.0)
    assert pred["moderate_ok"] is True
    assert close(pred["value"], fd.normal_sf(3.0), 1e-15)

    env = fd.lil_envelope(table, 4.0)
    assert close(env["value"], 10.0 * math.sqrt(2.0 * math.log(100.0)), 1e-9)

    rad = fd.InnovationModel.rademacher()
    three = fd.WeightTable.from_weights([1.0, 1.0, 1.0])
    assert fd.enumerate(three, rad, 3.0) == 0.125
    est = fd.simulate(three, rad, [math.sqrt(3.0)], 200_000, 7)
    assert abs(est[0]["p_hat"] - 0.125) < 5 * math.sqrt(0.125 * 0.875 / 200_000)

    field = fd.CoefficientField.finite_support([(0, 0, 1.0), (1, 0, 0.5), (0, 1, 0.5)])
    heavy = fd.InnovationModel.hybrid(3.0)
    w = fd.WeightTable.build(field, fd.IndexRegion.square(3))
    large = fd.large_prediction(w, heavy, 8.0 * math.sqrt(w.sigma2))
    assert large["regime"] == "large" and large["value"] > 0

    psi, m = fd.davis_gut_psi("log", 16.0, c=math.e)
    assert m == 16 and close(psi, math.log(math.log(16.0)), 1e-12)
    assert fd.davis_gut_converges("one", 0.0, b=0.6)
    assert not fd.davis_gut_converges("log_pow", 0.0, r=0.3)

    doc = fd.run_config(json.dumps({"mode": "coeffs", "n_values": [10]}))
    assert doc["columns"][:4] == ["n", "region", "window_cells", "sigma2"]
    assert doc["rows"][0][3] == 100.0

    try:
        fd.run_config("{")
    except fd.FieldDevError:
        pass
    else:
        raise AssertionError("malformed config accepted")

    print("fielddev_py smoke test passed")


if __name__ == "__main__":
    main()

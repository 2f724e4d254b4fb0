"""Smoke test for the `bga` extension module.

Build and run from the repository root:

    cargo build --release -p bga-py --features extension-module
    cp target/release/libbga.so python/bga.so
    python3 python/smoke_test.py
"""

import json
import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

import bga  # noqa: E402

BASE = {"PI": 695_262_700.0, "EM": 4000.0, "PT": 2400.0, "BD": 1_200_000.0}
BASE_Y = 632_057_000.0


def close(a, b, rel):
    return abs(a - b) <= rel * abs(b)


def main():
    d = bga.decompose(0.05, {"L": 0.01, "K": 0.06}, {"L": 0.67, "K": 0.33})
    assert abs(d["contributions"]["TFP"] - 0.0235) < 5e-5, d
    assert abs(d["shares"]["K"] - 0.396) < 1e-3, d

    assert bga.years_to_multiple_rule70(10.0) == 7.0
    assert abs(bga.years_to_multiple_exact(3.0, 0.10) - 11.5267) < 1e-4
    closed = bga.required_rate(632_057_000, 1_097_000_000, 0.03, 5)
    numeric = bga.required_rate(632_057_000, 1_097_000_000, 0.03, 5, numeric=True)
    assert abs(closed - 0.150078) < 1e-6 and abs(closed - numeric) < 1e-10
    assert abs(bga.catchup_horizon(632_057_000, 1_097_000_000, 0.03, 0.07) - 14.4713) < 1e-4
    assert abs(bga.approximation_gap(0.05, 0.0952381) - 0.05 * 0.0952381) < 1e-12

    model = bga.ProductionModel(9811.0, {"PI": 0.2, "EM": 0.3, "PT": 0.4, "BD": 0.1})
    assert model.returns_to_scale() == "CRTS"
    assert close(bga.back_out_tfp(BASE, BASE_Y, model.elasticities), 9811.0, 5e-3)

    plan = bga.generate_schedule(
        model, BASE, BASE_Y, 0.15, 5,
        strategy="mixed", tfp_growth=0.05, discrete_inputs=["EM", "PT"],
    )
    assert abs(plan.common_input_growth - 0.0952381) < 1e-6
    rows = plan.rows
    assert len(rows) == 6 and len(plan) == 6
    assert close(rows[5]["output"], 1_271_292_390.0, 1e-3)
    assert rows[1]["input_levels_display"]["EM"] == 4381.0
    assert plan.on_expansion_path()
    parts = plan.decompose()
    assert abs(parts["exact_output_growth"] - 0.15) < 1e-9
    assert plan.to_csv().startswith("year,Y,gY%,TFP,gTFP%,PI,gPI%")
    again = bga.GrowthPlan.from_json(plan.to_json())
    assert again.to_json() == plan.to_json()

    shortfall = plan.evaluate(1, rows[1]["input_levels"], rows[1]["output"] * 0.95)
    assert abs(shortfall["output_gap"] + 0.05) < 1e-12
    replanned = plan.replan(1, rows[1]["input_levels"], rows[1]["output"] * 0.95)
    assert replanned.annual_output_growth > plan.annual_output_growth

    csv = "period,L,K,output\n" + "".join(
        f"{i},{l},{k},{1.5 * l**0.3 * k**0.6}\n"
        for i, (l, k) in enumerate([(2, 3), (5, 1.5), (7, 9), (3, 4), (11, 2)])
    )
    fitted = bga.fit_cobb_douglas(bga.Dataset.from_csv(csv))
    assert abs(fitted.elasticities["L"] - 0.3) < 1e-8
    assert math.isclose(fitted.tfp, 1.5, rel_tol=1e-8)
    assert json.loads(fitted.to_json())["elasticities"]["K"] == fitted.elasticities["K"]

    try:
        bga.catchup_horizon(1.0, 2.0, 0.05, 0.03)
    except bga.BgaError as e:
        assert e.args[0] == "NeverCatches", e.args
    else:
        raise AssertionError("expected BgaError")
    try:
        bga.generate_schedule(model, BASE, BASE_Y, 0.15, 5, strategy="mixed", tfp_growth=0.3)
    except ValueError as e:
        assert e.args[0] == "InfeasibleMix", e.args
    else:
        raise AssertionError("expected BgaError")

    print("bga smoke test: ok")


if __name__ == "__main__":
    main()

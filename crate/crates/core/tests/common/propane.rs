//! Propane-retailer reference schedules used as golden data.
#![allow(dead_code)]

/// Input ids in column order.
pub const INPUTS: [&str; 4] = ["PI", "EM", "PT", "BD"];

pub const ELASTICITIES: [(&str, f64); 4] = [("PI", 0.2), ("EM", 0.3), ("PT", 0.4), ("BD", 0.1)];

pub const REFERENCE_TFP: f64 = 9811.0;

/// `year, Y, TFP, PI, EM, PT, BD` with 15% output growth from inputs alone.
pub const INPUTS_ONLY: [[f64; 7]; 6] = [
    [0.0, 632_057_000.0, 9811.0, 695_262_700.0, 4000.0, 2400.0, 1_200_000.0],
    [1.0, 726_865_550.0, 9811.0, 799_552_105.0, 4600.0, 2760.0, 1_380_000.0],
    [2.0, 835_895_383.0, 9811.0, 919_484_921.0, 5290.0, 3174.0, 1_587_000.0],
    [3.0, 961_279_690.0, 9811.0, 1_057_407_659.0, 6084.0, 3650.0, 1_825_050.0],
    [4.0, 1_105_471_643.0, 9811.0, 1_216_018_808.0, 6996.0, 4198.0, 2_098_808.0],
    [5.0, 1_271_292_390.0, 9811.0, 1_398_421_629.0, 8045.0, 4827.0, 2_413_629.0],
];

/// Same layout, with 5% annual TFP growth and the rest from inputs.
pub const MIXED: [[f64; 7]; 6] = [
    [0.0, 632_057_000.0, 9811.0, 695_262_700.0, 4000.0, 2400.0, 1_200_000.0],
    [1.0, 726_865_550.0, 10_302.0, 761_521_235.0, 4381.0, 2629.0, 1_314_360.0],
    [2.0, 835_895_383.0, 10_817.0, 834_094_209.0, 4799.0, 2879.0, 1_439_619.0],
    [3.0, 961_279_690.0, 11_357.0, 913_583_387.0, 5256.0, 3154.0, 1_576_814.0],
    [4.0, 1_105_471_643.0, 11_925.0, 1_000_647_884.0, 5757.0, 3454.0, 1_727_085.0],
    [5.0, 1_271_292_390.0, 12_522.0, 1_096_009_627.0, 6306.0, 3783.0, 1_891_676.0],
];

/// Reference growth-rate columns, in percent.
pub const INPUTS_ONLY_RATES: (f64, f64, f64) = (15.0, 0.0, 15.00);
pub const MIXED_RATES: (f64, f64, f64) = (15.0, 5.0, 9.53);

/// Per-source contributions of the mixed plan, in percentage points.
pub const MIXED_CONTRIBUTIONS_PP: [(&str, f64); 5] = [
    ("PI", 1.906),
    ("EM", 2.859),
    ("PT", 3.812),
    ("BD", 0.953),
    ("TFP", 5.0),
];

pub const BASE_CSV: &str = "period,PI,EM,PT,BD,output\n0,695262700,4000,2400,1200000,632057000\n";

pub fn rel_err(got: f64, want: f64) -> f64 {
    ((got - want) / want).abs()
}

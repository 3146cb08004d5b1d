//! The six-symbol-input, four-output MAC with two correlated binary sources
//! used throughout the tests and the bundled configuration.

use super::{Instance, InputDistributionBank, JointSource, MacChannel, ModelError};

/// Row permutations of the base block for each value of `x₂` (0-based).
///
/// Block `x₂` lists, for `x₁ = 0..6`, which base row supplies `W(·|x₁, x₂)`.
/// In the 1-based stacked-matrix form, `W(y|x₁,x₂)` sits at row
/// `x₁ + 6(x₂ − 1)`; 0-based that is row `x₁ + 6·x₂`.
const BLOCKS: [[usize; 6]; 6] = [
    [0, 1, 2, 3, 4, 5],
    [4, 4, 4, 4, 4, 4],
    [5, 5, 5, 5, 5, 5],
    [1, 2, 3, 0, 5, 4],
    [2, 3, 0, 1, 4, 5],
    [3, 0, 1, 2, 5, 4],
];

fn base_block(k1: f64, k2: f64) -> [[f64; 4]; 6] {
    let d = 1.0 - 3.0 * k1;
    let h = 0.5 - k2;
    [
        [d, k1, k1, k1],
        [k1, d, k1, k1],
        [k1, k1, d, k1],
        [k1, k1, k1, d],
        [h, h, k2, k2],
        [k2, k2, h, h],
    ]
}

/// Builds the example channel for `0 ≤ k₁ ≤ 1/3`, `0 ≤ k₂ ≤ 1/2`.
pub fn example_channel(k1: f64, k2: f64) -> Result<MacChannel, ModelError> {
    if !(0.0..=1.0 / 3.0).contains(&k1) {
        return Err(ModelError::ParameterOutOfRange { name: "k1", value: k1, lo: 0.0, hi: 1.0 / 3.0 });
    }
    if !(0.0..=0.5).contains(&k2) {
        return Err(ModelError::ParameterOutOfRange { name: "k2", value: k2, lo: 0.0, hi: 0.5 });
    }
    let base = base_block(k1, k2);
    let tensor: Vec<Vec<Vec<f64>>> = (0..6)
        .map(|x1| (0..6).map(|x2| base[BLOCKS[x2][x1]].to_vec()).collect())
        .collect();
    MacChannel::new(&tensor)
}

pub fn example_source() -> JointSource {
    JointSource::new(&[vec![0.0005, 0.0095], vec![0.0005, 0.9895]]).expect("example source is valid")
}

/// Bank with class 1 on symbols 5–6 and class 2 uniform on symbols 1–4,
/// for both users.
pub fn example_bank() -> InputDistributionBank {
    let high = vec![0.0, 0.0, 0.0, 0.0, 0.5, 0.5];
    let low = vec![0.25, 0.25, 0.25, 0.25, 0.0, 0.0];
    InputDistributionBank::new([[high.clone(), low.clone()], [high, low]]).expect("example bank is valid")
}

/// Source, channel with `k₁ = 0.045`, `k₂ = 0.01`, and [`example_bank`].
pub fn example_instance() -> Instance {
    let channel = example_channel(0.045, 0.01).expect("in range");
    Instance::new(example_source(), channel, example_bank()).expect("alphabets agree")
}

//! Reference data and brute-force oracles that share no code with the
//! closed-form evaluation they check.

use churnprobe::ExactRational;

/// Hit probabilities of the published core-size grid.
pub const PUBLISHED_P: [&str; 2] = ["99%", "99.9%"];
/// Churn ratios of the grid, in row order.
pub const PUBLISHED_C: [&str; 5] = ["static", "10%", "30%", "60%", "80%"];
/// Population sizes of the grid, in column order.
pub const PUBLISHED_N: [u64; 3] = [1_000, 10_000, 100_000];
/// Published minimal core sizes, indexed `[p][C][n]`.
pub const PUBLISHED_Q: [[[u64; 3]; 5]; 2] = [
    [
        [66, 213, 677],
        [70, 224, 714],
        [79, 255, 809],
        [105, 337, 1071],
        [143, 478, 1516],
    ],
    [
        [80, 260, 828],
        [85, 274, 873],
        [96, 311, 990],
        [128, 413, 1311],
        [182, 584, 1855],
    ],
];

pub fn ratio(num: u64, den: u64) -> ExactRational {
    ExactRational::new(num.into(), den.into())
}

/// Miss probabilities for every `(q, alpha)` at population `n`, by walking
/// all replaced sets and all probe sets as bitmasks.
///
/// The core is nodes `0..q` (any fixed core gives the same answer). A probe
/// set of size `q` misses when it avoids every core node that was not
/// replaced. Indexed `[q][alpha]`.
pub fn enumerate_miss_probabilities(n: u32) -> Vec<Vec<ExactRational>> {
    assert!(n <= 16, "enumeration is 4^n");
    let size = (n + 1) as usize;
    let mut misses = vec![vec![0u64; size]; size];
    let mut totals = vec![vec![0u64; size]; size];
    for replaced in 0u32..1 << n {
        let alpha = replaced.count_ones() as usize;
        for probes in 0u32..1 << n {
            let q = probes.count_ones();
            let core = (1u32 << q) - 1;
            totals[q as usize][alpha] += 1;
            if probes & core & !replaced == 0 {
                misses[q as usize][alpha] += 1;
            }
        }
    }
    (0..size)
        .map(|q| {
            (0..size)
                .map(|a| ratio(misses[q][a], totals[q][a]))
                .collect()
        })
        .collect()
}

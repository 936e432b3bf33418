//! Oracles for the shipped test suites, shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use stackgene::testio::TestSuite;

pub fn suites_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../suites")
}

pub fn factorial(n: i32) -> i32 {
    (1..=n).fold(1i32, |a, b| a.wrapping_mul(b))
}

/// 20 fixed pairs covering equal, ascending, descending and negative inputs.
pub fn pairs() -> Vec<Vec<i32>> {
    (0..20).map(|i| vec![(i * 7 % 11) - 5, (i * 5 % 13) - 6]).collect()
}

pub fn singles() -> impl Iterator<Item = Vec<i32>> {
    (-10..10).map(|x| vec![x])
}

/// A function on {0, .., n-1} given by its values.
pub fn table(name: &str, values: &[i32]) -> TestSuite {
    let v = values.to_vec();
    let text = values.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    TestSuite::from_oracle(
        name,
        &format!("x -> {text}"),
        (0..v.len() as i32).map(|x| vec![x]),
        move |a| vec![v[a[0] as usize]],
    )
}

/// Random functions on {0, 1, 2, 3} with no program of 6 or fewer words
/// over [`RF_WORDS`] and [`RF_CONSTS`].
pub const HARD_TABLES: &[(&str, [i32; 4])] = &[("RF_0302", [0, 3, 0, 2]), ("RF_0312", [0, 3, 1, 2])];

/// Base words plus the words offered to word selection for random functions.
pub const RF_WORDS: &str = "IF CONST DUP DROP SWAP OVER ROT -ROT + - * ++ -- 0= 0< AND OR XOR NOT / %";
pub const RF_CONSTS: [i8; 6] = [-3, -2, -1, 1, 2, 3];

pub fn shipped() -> Vec<TestSuite> {
    let mut v = vec![
        TestSuite::from_oracle("SQUARE", "x -> x*x", singles(), |a| vec![a[0] * a[0]]),
        TestSuite::from_oracle("MUL2", "x -> 2x", singles(), |a| vec![2 * a[0]]),
        TestSuite::from_oracle("ODD", "x -> 1 if x is odd else 0", singles(), |a| {
            vec![(a[0] % 2 != 0) as i32]
        }),
        TestSuite::from_oracle("MAX2", "x y -> max(x,y)", pairs(), |a| vec![a[0].max(a[1])]),
        TestSuite::from_oracle("SORT2", "x y -> min(x,y) max(x,y)", pairs(), |a| {
            vec![a[0].min(a[1]), a[0].max(a[1])]
        }),
        TestSuite::from_oracle("FACTORIAL", "n -> n!", (1..=13).map(|n| vec![n]), |a| {
            vec![factorial(a[0])]
        }),
        TestSuite::from_oracle("FACTORIAL_1", "n -> n! for n >= 2", (2..=13).map(|n| vec![n]), |a| {
            vec![factorial(a[0])]
        }),
        TestSuite::from_oracle("DISCR", "a b c -> b*b-4ac", discr_inputs(), |a| {
            vec![a[1] * a[1] - 4 * a[0] * a[2]]
        }),
        TestSuite::from_oracle("IDENTITY", "x -> x", singles(), |a| vec![a[0]]),
    ];
    v.extend(HARD_TABLES.iter().map(|(n, t)| table(n, t)));
    v
}

pub fn discr_inputs() -> Vec<Vec<i32>> {
    (0..20)
        .map(|i| vec![(i % 5) - 2, (i * 3 % 7) - 3, (i * 2 % 9) - 4])
        .collect()
}

pub fn shipped_named(name: &str) -> TestSuite {
    shipped().into_iter().find(|s| s.name == name).expect("known suite")
}

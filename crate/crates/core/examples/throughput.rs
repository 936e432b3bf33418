//! Exhaustive-search throughput on a 10-item suite.
//!
//! Usage: `throughput [max_len] [max_steps]`

use stackgene::enumerator::{default_forbidden_pairs, enumerate, EnumConfig, SearchAlphabet};
use stackgene::testio::TestSuite;
use stackgene::vm::Dictionary;

fn main() {
    let mut args = std::env::args().skip(1);
    let max_len: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(5);
    let steps: u32 = args.next().and_then(|s| s.parse().ok()).unwrap_or(10_000);
    let d = Dictionary::builtin();
    let suite = TestSuite::from_oracle("CUBEP", "x -> x^3+x+7", (1..=10).map(|x| vec![x]), |v| {
        vec![v[0] * v[0] * v[0] + v[0] + 7]
    });
    let mut cfg = EnumConfig {
        max_len,
        ..Default::default()
    };
    cfg.limits.max_steps = steps;
    let r = enumerate(
        &SearchAlphabet::standard(),
        &default_forbidden_pairs(),
        &cfg,
        &suite,
        &d,
    );
    let secs = r.elapsed.as_secs_f64();
    println!(
        "len<={max_len} visited={} ({:.0}/s) evaluated={} ({:.0}/s) elapsed={secs:.2}s found={}",
        r.visited,
        r.visited as f64 / secs,
        r.evaluated,
        r.throughput(),
        r.found.is_some()
    );
}

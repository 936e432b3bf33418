//! Exhaustive search over every function {0,1,2,3} -> {0,1,2,3}.
//!
//! Usage: `sweep <max_len> [code,...|all] [words] [consts]`. A function's
//! code is its four values read as base-4 digits, f(0) first. `words` and
//! `consts` replace the standard alphabet and constant values. Prints the
//! shortest program found, or `none`.

use stackgene::enumerator::{default_forbidden_pairs, enumerate, EnumConfig, SearchAlphabet};
use stackgene::testio::TestSuite;
use stackgene::vm::{disassemble, Dictionary};

fn main() {
    let mut args = std::env::args().skip(1);
    let max_len: usize = args
        .next()
        .and_then(|s| s.parse().ok())
        .expect("usage: sweep <max_len> [code,...]");
    let only: Option<Vec<usize>> = args
        .next()
        .filter(|s| s != "all")
        .map(|s| s.split(',').filter_map(|x| x.parse().ok()).collect());
    let d = Dictionary::builtin();
    let mut alphabet = match args.next() {
        Some(w) => SearchAlphabet::from_names(&w.split_whitespace().collect::<Vec<_>>(), &d).expect("known words"),
        None => SearchAlphabet::standard(),
    };
    if let Some(c) = args.next() {
        let values = c.split_whitespace().map(|v| v.parse::<i8>().expect("constant"));
        alphabet = SearchAlphabet::new(alphabet.words, values);
    }
    for code in 0..256usize {
        if only.as_ref().is_some_and(|o| !o.contains(&code)) {
            continue;
        }
        let f: Vec<i32> = (0..4).map(|i| ((code >> (2 * (3 - i))) & 3) as i32).collect();
        let suite = TestSuite::from_oracle("RF", "", (0..4).map(|x| vec![x]), |v| vec![f[v[0] as usize]]);
        let cfg = EnumConfig {
            max_len,
            ..Default::default()
        };
        let r = enumerate(&alphabet, &default_forbidden_pairs(), &cfg, &suite, &d);
        match r.found {
            Some(p) => println!(
                "{code} {f:?} {} {}",
                p.instruction_count(),
                disassemble(&p, &d).unwrap()
            ),
            None => println!("{code} {f:?} none"),
        }
    }
}

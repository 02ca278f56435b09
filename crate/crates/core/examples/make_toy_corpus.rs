//! Writes the bundled synthetic label corpus to stdout.
//!
//! Each line has 6 to 12 tokens. The token at position `n` is drawn from a
//! fixed Dirichlet-sampled unigram for position `n mod 8`, so the first
//! eight positions carry distinct statistics.
//!
//! ```text
//! cargo run -p seqbound --example make_toy_corpus > data/toy_corpus.txt
//! ```

use std::io::{self, BufWriter, Write};

use rand::Rng;
use seqbound::prob::{dirichlet, rng_from_seed};

const TOKENS: [&str; 6] = ["sil", "aa", "b", "iy", "k", "s"];
const LINES: usize = 14_000;
const PERIOD: usize = 8;
const SEED: u64 = 2024;

fn sample(rng: &mut impl Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

fn main() -> io::Result<()> {
    let mut rng = rng_from_seed(SEED);
    let tables: Vec<Vec<f64>> =
        (0..PERIOD).map(|_| dirichlet(&mut rng, TOKENS.len(), 1.0).expect("valid concentration")).collect();
    let mut out = BufWriter::new(io::stdout().lock());
    for _ in 0..LINES {
        let len = rng.random_range(6..=12);
        let line: Vec<&str> = (0..len).map(|n| TOKENS[sample(&mut rng, &tables[n % PERIOD])]).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    out.flush()
}

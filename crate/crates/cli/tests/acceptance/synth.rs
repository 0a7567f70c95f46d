//! Synthetic labeled corpus with class-specific keywords and controlled
//! overlap between neighbouring classes.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct SyntheticParams {
    pub classes: usize,
    pub docs_per_class: usize,
    pub keywords_per_class: usize,
    pub shared_words: usize,
    /// Probability that a token is drawn from the document's own class.
    pub own: f64,
    /// Probability that a token is drawn from one of the two neighbouring classes.
    pub neighbour: f64,
    pub min_len: usize,
    pub max_len: usize,
    pub seed: u64,
}

pub struct SyntheticCorpus {
    /// `(text, class code)` in generation order.
    pub docs: Vec<(String, String)>,
}

fn word(rng: &mut ChaCha8Rng) -> String {
    const CONSONANTS: &[u8] = b"bcdfgjklmnprtvz";
    const VOWELS: &[u8] = b"aeiou";
    let syllables = rng.random_range(2..=3);
    let mut w = String::new();
    for _ in 0..syllables {
        w.push(*CONSONANTS.choose(rng).unwrap() as char);
        w.push(*VOWELS.choose(rng).unwrap() as char);
    }
    w
}

pub fn generate(params: &SyntheticParams) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut seen = BTreeSet::new();
    let mut fresh = |rng: &mut ChaCha8Rng| loop {
        let w = word(rng);
        if seen.insert(w.clone()) {
            return w;
        }
    };
    let keywords: Vec<Vec<String>> = (0..params.classes)
        .map(|_| (0..params.keywords_per_class).map(|_| fresh(&mut rng)).collect())
        .collect();
    let shared: Vec<String> = (0..params.shared_words).map(|_| fresh(&mut rng)).collect();
    let codes: Vec<String> = (0..params.classes).map(|c| format!("{:04}", 1000 + 37 * c)).collect();

    let mut docs = Vec::with_capacity(params.classes * params.docs_per_class);
    for _ in 0..params.docs_per_class {
        for c in 0..params.classes {
            let len = rng.random_range(params.min_len..=params.max_len);
            let tokens: Vec<&str> = (0..len)
                .map(|_| {
                    let u: f64 = rng.random();
                    let pool = if u < params.own {
                        &keywords[c]
                    } else if u < params.own + params.neighbour {
                        let step = if rng.random_bool(0.5) { 1 } else { params.classes - 1 };
                        &keywords[(c + step) % params.classes]
                    } else {
                        &shared
                    };
                    // skewed choice: low indices are more frequent
                    let i = ((rng.random::<f64>().powi(2)) * pool.len() as f64) as usize;
                    pool[i.min(pool.len() - 1)].as_str()
                })
                .collect();
            docs.push((tokens.join(" "), codes[c].clone()));
        }
    }
    SyntheticCorpus { docs }
}

impl SyntheticCorpus {
    pub fn to_jsonl(&self) -> String {
        self.docs
            .iter()
            .map(|(text, class)| serde_json::json!({"d1": text, "class": class}).to_string() + "\n")
            .collect()
    }
}

//! Fixtures shared by the integration tests: a seeded English-like corpus and
//! random fixed-table backends.
#![allow(dead_code)]

use dsweep_core::backend::{FixedTableModel, TokenId, Vocabulary};
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DETERMINERS: &[&str] = &[
    "the", "a", "this", "that", "every", "some", "one", "her", "his", "their", "our", "no",
];
const ADJECTIVES: &[&str] = &[
    "old", "small", "quiet", "bright", "long", "cold", "young", "dark", "green", "heavy",
    "strange", "empty", "warm", "broken", "distant", "gentle", "narrow", "sudden", "pale",
    "ancient", "busy", "simple", "golden", "careful", "wild", "hidden", "tired", "open", "soft",
    "early",
];
const NOUNS: &[&str] = &[
    "man", "woman", "child", "river", "house", "road", "city", "garden", "dog", "cat", "window",
    "door", "letter", "morning", "night", "king", "village", "teacher", "train", "forest", "ship",
    "market", "friend", "mountain", "storm", "book", "field", "bridge", "doctor", "soldier",
    "lamp", "voice", "table", "island", "farmer", "machine", "song", "winter", "stranger",
    "council", "harbor", "engine", "kitchen", "painter", "shadow", "crowd", "mirror", "wall",
    "boat", "clock",
];
const VERBS: &[&str] = &[
    "saw",
    "found",
    "followed",
    "crossed",
    "remembered",
    "opened",
    "built",
    "watched",
    "carried",
    "left",
    "heard",
    "painted",
    "lost",
    "visited",
    "described",
    "repaired",
    "sold",
    "answered",
    "closed",
    "reached",
    "admired",
    "avoided",
    "noticed",
    "praised",
    "questioned",
];
const INTRANSITIVE: &[&str] = &[
    "slept", "waited", "laughed", "vanished", "arrived", "listened", "trembled", "smiled",
    "returned", "fell",
];
const ADVERBS: &[&str] = &[
    "slowly",
    "again",
    "quietly",
    "suddenly",
    "carefully",
    "today",
    "later",
    "there",
    "at last",
    "once more",
];
const PREPOSITIONS: &[&str] = &[
    "near", "behind", "under", "across", "beside", "inside", "beyond", "toward", "along",
];
const CONNECTIVES: &[&str] = &["and", "but", "while", "because", "so", "although"];

/// Samples words with Zipf-like frequencies so the text has the skewed
/// unigram profile of natural language.
struct Lexicon {
    words: &'static [&'static str],
    dist: WeightedIndex<f64>,
}

impl Lexicon {
    fn new(words: &'static [&'static str]) -> Self {
        let weights: Vec<f64> = (0..words.len()).map(|r| 1.0 / (r as f64 + 1.0)).collect();
        Lexicon {
            words,
            dist: WeightedIndex::new(weights).expect("positive weights"),
        }
    }

    fn pick(&self, rng: &mut ChaCha8Rng) -> &'static str {
        self.words[self.dist.sample(rng)]
    }
}

pub struct TextGenerator {
    rng: ChaCha8Rng,
    det: Lexicon,
    adj: Lexicon,
    noun: Lexicon,
    verb: Lexicon,
    intr: Lexicon,
    adv: Lexicon,
    prep: Lexicon,
    conn: Lexicon,
}

impl TextGenerator {
    pub fn new(seed: u64) -> Self {
        TextGenerator {
            rng: ChaCha8Rng::seed_from_u64(seed),
            det: Lexicon::new(DETERMINERS),
            adj: Lexicon::new(ADJECTIVES),
            noun: Lexicon::new(NOUNS),
            verb: Lexicon::new(VERBS),
            intr: Lexicon::new(INTRANSITIVE),
            adv: Lexicon::new(ADVERBS),
            prep: Lexicon::new(PREPOSITIONS),
            conn: Lexicon::new(CONNECTIVES),
        }
    }

    fn noun_phrase(&mut self, out: &mut Vec<String>) {
        out.push(self.det.pick(&mut self.rng).into());
        if self.rng.gen_bool(0.4) {
            out.push(self.adj.pick(&mut self.rng).into());
        }
        out.push(self.noun.pick(&mut self.rng).into());
        if self.rng.gen_bool(0.15) {
            out.push(self.prep.pick(&mut self.rng).into());
            out.push(self.det.pick(&mut self.rng).into());
            out.push(self.noun.pick(&mut self.rng).into());
        }
    }

    fn clause(&mut self, out: &mut Vec<String>) {
        self.noun_phrase(out);
        if self.rng.gen_bool(0.7) {
            out.push(self.verb.pick(&mut self.rng).into());
            self.noun_phrase(out);
        } else {
            out.push(self.intr.pick(&mut self.rng).into());
        }
        if self.rng.gen_bool(0.3) {
            out.extend(self.adv.pick(&mut self.rng).split(' ').map(String::from));
        }
    }

    pub fn sentence(&mut self) -> Vec<String> {
        let mut out = Vec::new();
        self.clause(&mut out);
        if self.rng.gen_bool(0.35) {
            out.push(self.conn.pick(&mut self.rng).into());
            self.clause(&mut out);
        }
        out.push(".".into());
        out
    }

    /// A document of at least `min_tokens` whitespace tokens.
    pub fn document(&mut self, min_tokens: usize) -> Vec<String> {
        let mut doc = Vec::new();
        while doc.len() < min_tokens {
            doc.extend(self.sentence());
        }
        doc
    }

    /// Documents totalling at least `total_tokens` tokens.
    pub fn corpus(&mut self, total_tokens: usize, doc_tokens: usize) -> Vec<Vec<String>> {
        let mut docs = Vec::new();
        let mut n = 0;
        while n < total_tokens {
            let d = self.document(doc_tokens);
            n += d.len();
            docs.push(d);
        }
        docs
    }
}

/// Joins tokenized documents into blank-line separated text.
pub fn as_text(docs: &[Vec<String>]) -> String {
    docs.iter()
        .map(|d| d.join(" "))
        .collect::<Vec<_>>()
        .join("\n\n")
}

fn random_probs(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Every context of length `0..horizon` over `vocab_size` tokens.
pub fn contexts(vocab_size: usize, horizon: usize) -> Vec<Vec<TokenId>> {
    let mut all = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 1..horizon {
        let mut next = Vec::new();
        for c in &frontier {
            for t in 0..vocab_size {
                let mut e: Vec<TokenId> = c.clone();
                e.push(t);
                next.push(e);
            }
        }
        all.extend(next.iter().cloned());
        frontier = next;
    }
    all
}

/// A fixed table with a random full-support row for every context shorter
/// than `horizon`. Token names avoid the reserved end-of-text token.
pub fn random_table(
    seed: u64,
    vocab_size: usize,
    horizon: usize,
    representations: bool,
) -> FixedTableModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = Vocabulary::new((0..vocab_size).map(|i| format!("t{i}"))).unwrap();
    let mut b = FixedTableModel::builder(format!("table{seed}"), vocab);
    for ctx in contexts(vocab_size, horizon) {
        let probs = random_probs(&mut rng, vocab_size);
        b = b.row(&ctx, &probs);
    }
    if representations {
        b = b.hashed_representations(16, 1);
    }
    b.build().unwrap()
}

/// All `vocab_size^len` sequences.
pub fn all_sequences(vocab_size: usize, len: usize) -> Vec<Vec<TokenId>> {
    let mut seqs = vec![Vec::new()];
    for _ in 0..len {
        seqs = seqs
            .into_iter()
            .flat_map(|s| {
                (0..vocab_size).map(move |t| {
                    let mut e = s.clone();
                    e.push(t);
                    e
                })
            })
            .collect();
    }
    seqs
}

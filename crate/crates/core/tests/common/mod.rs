//! Independent oracles and synthetic data shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use std::path::PathBuf;

use std::path::Path;

use biasaudit::preprocess::Document;
use biasaudit::{AttributionRecord, Label, Language, Split};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Exact decimal as a rational: "0.2377" -> 2377/10000.
pub fn rational(decimal: &str) -> BigRational {
    let (int, frac) = decimal.split_once('.').unwrap_or((decimal, ""));
    let num: BigInt = format!("{int}{frac}").parse().unwrap();
    let den = BigInt::from(10u32).pow(frac.len() as u32);
    BigRational::new(num, den)
}

fn choose(n: u64, k: u64) -> BigInt {
    let mut c = BigInt::one();
    for i in 0..k {
        c = c * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    c
}

/// `P(X >= k)` by exact rational summation.
pub fn exact_upper_tail(n: u64, k: u64, p: &BigRational) -> BigRational {
    let q = BigRational::one() - p;
    let mut total = BigRational::zero();
    for j in k..=n {
        let term = BigRational::from_integer(choose(n, j)) * num_traits::pow(p.clone(), j as usize)
            * num_traits::pow(q.clone(), (n - j) as usize);
        total += term;
    }
    total
}

/// `P(X >= k)` for every k in 0..=n, from one pass of exact pmf terms.
pub fn exact_upper_tails(n: u64, p: &BigRational) -> Vec<BigRational> {
    let q = BigRational::one() - p;
    let mut pmf = Vec::with_capacity(n as usize + 1);
    let mut term = num_traits::pow(q.clone(), n as usize);
    let ratio = p / &q;
    for j in 0..=n {
        pmf.push(term.clone());
        term = term * BigRational::new(BigInt::from(n - j), BigInt::from(j + 1)) * &ratio;
    }
    let mut tails = vec![BigRational::zero(); n as usize + 2];
    for j in (0..=n as usize).rev() {
        tails[j] = &tails[j + 1] + &pmf[j];
    }
    tails.truncate(n as usize + 1);
    tails
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap()
}

/// Majority of labels with even splits going to dismissal, by counting.
pub fn brute_majority(labels: &[Label]) -> Label {
    let zeros = labels.iter().filter(|&&l| l == Label::Dismissal).count();
    let ones = labels.len() - zeros;
    if ones > zeros {
        Label::Approval
    } else {
        Label::Dismissal
    }
}

/// Stationary distribution of the damped walk on a binarized graph, by
/// Gaussian elimination on `(I - d Pᵀ) x = (1 - d)/n`.
pub fn exact_lexrank(adj: &[Vec<bool>], damping: f64) -> Vec<f64> {
    let n = adj.len();
    let rows: Vec<Vec<f64>> = adj
        .iter()
        .map(|r| {
            let deg = r.iter().filter(|&&e| e).count();
            if deg == 0 {
                vec![1.0 / n as f64; n]
            } else {
                r.iter().map(|&e| if e { 1.0 / deg as f64 } else { 0.0 }).collect()
            }
        })
        .collect();
    let mut a = vec![vec![0.0; n + 1]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = if i == j { 1.0 } else { 0.0 } - damping * rows[j][i];
        }
        a[i][n] = (1.0 - damping) / n as f64;
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        a.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=n {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let x: Vec<f64> = (0..n).map(|i| a[i][n] / a[i][i]).collect();
    let s: f64 = x.iter().sum();
    x.into_iter().map(|v| v / s).collect()
}

/// Small deterministic generator so fixtures do not depend on an RNG crate.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        self.0 >> 33
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }
}

const FILLER: &[&str] = &[
    "Gericht", "Urteil", "Beschwerde", "Verfahren", "Kosten", "Frist", "Partei", "Antrag", "Entscheid", "Sachverhalt",
    "gemäss", "wurde", "nicht", "keine", "jedoch", "bereits", "ebenfalls", "Vorinstanz", "Zeuge", "Vertrag",
];

/// Filler text of `words` words in sentences of 6 to 14 words.
pub fn filler(rng: &mut Lcg, words: usize) -> String {
    let mut out = Vec::with_capacity(words);
    let mut in_sentence = 0;
    let mut len = 6 + rng.below(9) as usize;
    for i in 0..words {
        let mut w = FILLER[rng.below(FILLER.len() as u64) as usize].to_string();
        if in_sentence == 0 {
            let mut c = w.chars();
            w = c.next().unwrap().to_uppercase().chain(c).collect();
        }
        in_sentence += 1;
        if in_sentence == len || i + 1 == words {
            w.push('.');
            in_sentence = 0;
            len = 6 + rng.below(9) as usize;
        }
        out.push(w);
    }
    out.join(" ")
}

pub fn synthetic_corpus(docs: usize, seed: u64) -> Vec<Document> {
    let mut rng = Lcg(seed);
    (0..docs)
        .map(|i| {
            let words = 1 + rng.below(1500) as usize;
            Document {
                id: format!("s{i:05}"),
                text: filler(&mut rng, words),
                label: if rng.below(5) == 0 { Label::Approval } else { Label::Dismissal },
                language: Language::De,
                split: Split::Train,
            }
        })
        .collect()
}

pub fn write_jsonl<T: serde::Serialize>(path: &Path, rows: &[T]) {
    let s: String = rows.iter().map(|r| serde_json::to_string(r).unwrap() + "\n").collect();
    std::fs::write(path, s).unwrap();
}

/// 2000 short German documents. "Opfer" appears in 100 of them, 80 labeled
/// dismissal; "gefährdet" appears in 100, exactly half dismissal.
pub fn planted_corpus(path: &Path) {
    let mut rng = Lcg(99);
    let docs: Vec<Document> = (0..2000)
        .map(|i| {
            let mut text = filler(&mut rng, 20);
            let label = if i < 100 {
                text.push_str(" Das Opfer klagt.");
                if i < 80 { Label::Dismissal } else { Label::Approval }
            } else if i < 200 {
                text.push_str(" Die Partei ist gefährdet.");
                if i % 2 == 0 { Label::Dismissal } else { Label::Approval }
            } else if i % 2 == 0 {
                Label::Dismissal
            } else {
                Label::Approval
            };
            Document { id: format!("p{i:04}"), text, label, language: Language::De, split: Split::Train }
        })
        .collect();
    write_jsonl(path, &docs);
}

const WORDS: &[&str] = &["la", "cour", "rejette", "le", "recours", "du", "requérant", "contre", "décision", "frais"];

/// Records where "victime" sits at a random position with attribution +0.3
/// toward dismissal and other words draw from [-0.2, 0.2].
pub fn planted(n: usize, seed: u64) -> Vec<AttributionRecord> {
    let mut rng = Lcg(seed);
    (0..n)
        .map(|i| {
            let len = 20 + rng.below(60) as usize;
            let at = rng.below(len as u64) as usize;
            let mut words = Vec::with_capacity(len);
            let mut attributions = Vec::with_capacity(len);
            let target = if i % 2 == 0 { Label::Dismissal } else { Label::Approval };
            for j in 0..len {
                if j == at {
                    words.push("victime".to_string());
                    attributions.push(if target == Label::Dismissal { 0.3 } else { -0.3 });
                } else {
                    words.push(WORDS[rng.below(WORDS.len() as u64) as usize].to_string());
                    attributions.push((rng.below(401) as f64 - 200.0) / 1000.0);
                }
            }
            AttributionRecord {
                unit_id: format!("fr-{i}#0"),
                predicted: if rng.below(2) == 0 { Label::Dismissal } else { Label::Approval },
                true_label: if rng.below(2) == 0 { Label::Dismissal } else { Label::Approval },
                attribution_target: target,
                words,
                attributions,
            }
        })
        .collect()
}


//! Component-model metrics: confusion matrices, top-k accuracy and
//! actor-partitioned train/test splits.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::EvalError;
use crate::emotion::{EmotionTaxonomy, EmotionVector};

/// One labeled model output.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub sample_id: String,
    pub actor_id: String,
    /// Taxonomy index of the true class.
    pub true_label: usize,
    pub scores: EmotionVector,
}

impl PredictionRecord {
    /// Parses `<sample_id>|<actor_id>|<true_label>|<score_1,...,score_k>`.
    pub fn parse(line: &str, taxonomy: &EmotionTaxonomy) -> Result<Self, EvalError> {
        let bad = |msg: String| EvalError::BadRecord(msg);
        let fields: Vec<&str> = line.split('|').collect();
        if fields.len() != 4 {
            return Err(bad(format!("expected 4 fields, got {}", fields.len())));
        }
        if fields[0].is_empty() || fields[1].is_empty() {
            return Err(bad("empty sample or actor id".into()));
        }
        let true_label = taxonomy
            .index_of(fields[2])
            .ok_or_else(|| bad(format!("unknown label {:?}", fields[2])))?;
        let scores: Vec<f64> = fields[3]
            .split(',')
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| bad(format!("bad score {s:?}")))
            })
            .collect::<Result<_, _>>()?;
        if scores.len() != taxonomy.len() {
            return Err(bad(format!(
                "expected {} scores, got {}",
                taxonomy.len(),
                scores.len()
            )));
        }
        let scores = EmotionVector::new(scores);
        scores
            .check_raw()
            .map_err(|e| bad(format!("scores: {e}")))?;
        Ok(Self {
            sample_id: fields[0].to_string(),
            actor_id: fields[1].to_string(),
            true_label,
            scores,
        })
    }

    pub fn predicted(&self) -> usize {
        self.scores.argmax().expect("scores are non-empty")
    }

    /// 0-based rank of the true label when classes are ordered by descending
    /// score, ties going to the lower taxonomy index.
    pub fn true_rank(&self) -> usize {
        let s = self.scores.values();
        let truth = s[self.true_label];
        s.iter()
            .enumerate()
            .filter(|(j, v)| **v > truth || (**v == truth && *j < self.true_label))
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalize {
    Counts,
    Row,
}

/// `counts[i][j]`: samples of true class `i` predicted as class `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Counts as reals, or rates with every supported row summing to 1.
    /// Rows without samples stay all-zero.
    pub fn values(&self, normalize: Normalize) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let support: u64 = row.iter().sum();
                row.iter()
                    .map(|&c| match normalize {
                        Normalize::Counts => c as f64,
                        Normalize::Row if support == 0 => 0.0,
                        Normalize::Row => c as f64 / support as f64,
                    })
                    .collect()
            })
            .collect()
    }
}

pub fn confusion_matrix(preds: &[PredictionRecord], k: usize) -> ConfusionMatrix {
    let mut counts = vec![vec![0u64; k]; k];
    for p in preds {
        counts[p.true_label][p.predicted()] += 1;
    }
    ConfusionMatrix { counts }
}

/// `(k, accuracy)` for `k = 1..=k_max`.
pub fn top_k_accuracy(
    preds: &[PredictionRecord],
    k_max: usize,
    classes: usize,
) -> Result<Vec<(usize, f64)>, EvalError> {
    if preds.is_empty() {
        return Err(EvalError::EmptyPredictions);
    }
    if k_max == 0 || k_max > classes {
        return Err(EvalError::InvalidK { k: k_max, classes });
    }
    let mut hits = vec![0usize; classes];
    for p in preds {
        hits[p.true_rank()] += 1;
    }
    let n = preds.len();
    let mut cumulative = 0;
    Ok((1..=k_max)
        .map(|k| {
            cumulative += hits[k - 1];
            (k, cumulative as f64 / n as f64)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorSplit {
    /// Actors in shuffled order; the first `test_actors.len()` form the test side.
    pub shuffled_actors: Vec<String>,
    pub train_actors: BTreeSet<String>,
    pub test_actors: BTreeSet<String>,
    pub train: Vec<PredictionRecord>,
    pub test: Vec<PredictionRecord>,
}

/// Sorts the distinct actors and shuffles them with a seeded ChaCha8 stream.
pub fn shuffled_actors(preds: &[PredictionRecord], seed: u64) -> Vec<String> {
    let set: BTreeSet<&str> = preds.iter().map(|p| p.actor_id.as_str()).collect();
    let mut actors: Vec<String> = set.into_iter().map(String::from).collect();
    actors.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    actors
}

/// Assigns whole actors to the test side: the shortest prefix of the
/// shuffled actor list holding at least `test_fraction` of the samples,
/// capped so the train side keeps at least one actor.
pub fn split_by_actor(
    preds: &[PredictionRecord],
    test_fraction: f64,
    seed: u64,
) -> Result<ActorSplit, EvalError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(EvalError::InvalidFraction(test_fraction));
    }
    let shuffled = shuffled_actors(preds, seed);
    if shuffled.len() < 2 {
        return Err(EvalError::TooFewActors(shuffled.len()));
    }
    let mut per_actor: BTreeMap<&str, usize> = BTreeMap::new();
    for p in preds {
        *per_actor.entry(&p.actor_id).or_default() += 1;
    }
    let target = test_fraction * preds.len() as f64;
    let mut taken = 0usize;
    let mut n_test = 0;
    for actor in &shuffled[..shuffled.len() - 1] {
        taken += per_actor[actor.as_str()];
        n_test += 1;
        if taken as f64 >= target {
            break;
        }
    }
    let test_actors: BTreeSet<String> = shuffled[..n_test].iter().cloned().collect();
    let train_actors: BTreeSet<String> = shuffled[n_test..].iter().cloned().collect();
    let (test, train): (Vec<_>, Vec<_>) = preds
        .iter()
        .cloned()
        .partition(|p| test_actors.contains(&p.actor_id));
    Ok(ActorSplit {
        shuffled_actors: shuffled,
        train_actors,
        test_actors,
        train,
        test,
    })
}

impl fmt::Display for ActorSplit {
    /// `actor|side|samples`, in shuffled order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "actor|side|samples")?;
        for actor in &self.shuffled_actors {
            let (side, set) = if self.test_actors.contains(actor) {
                ("test", &self.test)
            } else {
                ("train", &self.train)
            };
            let n = set.iter().filter(|p| &p.actor_id == actor).count();
            writeln!(f, "{actor}|{side}|{n}")?;
        }
        Ok(())
    }
}

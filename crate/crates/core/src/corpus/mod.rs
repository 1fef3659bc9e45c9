//! Labeled feature corpora: the data model, a synthetic Gaussian-mixture
//! generator emulating original features of varying discriminability,
//! query/gallery splitting, verification-pair construction, and bit-exact
//! file formats.

mod format;

pub use format::{
    read_checkpoint, read_corpus, read_corpus_text, read_pairs, write_checkpoint, write_corpus,
    write_pairs,
};

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::numcore::{Matrix, Rng};

/// Evaluation role of a feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Train,
    Query,
    Gallery,
}

impl Role {
    pub fn to_byte(self) -> u8 {
        match self {
            Role::Train => 0,
            Role::Query => 1,
            Role::Gallery => 2,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(Role::Train),
            1 => Some(Role::Query),
            2 => Some(Role::Gallery),
            _ => None,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Role::Train => 'T',
            Role::Query => 'Q',
            Role::Gallery => 'G',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c {
            'T' | 't' => Some(Role::Train),
            'Q' | 'q' => Some(Role::Query),
            'G' | 'g' => Some(Role::Gallery),
            _ => None,
        }
    }
}

/// One feature vector with its class label and evaluation role.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFeature {
    pub id: u32,
    pub label: u32,
    pub role: Role,
    pub values: Vec<f64>,
}

/// An immutable collection of labeled features of one dimension, with a
/// class index kept consistent with the feature list.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCorpus {
    dim: usize,
    features: Vec<LabeledFeature>,
    class_index: BTreeMap<u32, Vec<u32>>,
    id_to_pos: HashMap<u32, usize>,
}

impl FeatureCorpus {
    pub fn new(dim: usize, features: Vec<LabeledFeature>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("corpus dimension must be >= 1"));
        }
        let mut class_index: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        let mut id_to_pos = HashMap::with_capacity(features.len());
        for (pos, f) in features.iter().enumerate() {
            if f.values.len() != dim {
                return Err(Error::data(format!(
                    "feature {} has dimension {}, corpus expects {dim}",
                    f.id,
                    f.values.len()
                )));
            }
            if f.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::numeric(format!("feature {} has a non-finite value", f.id)));
            }
            if id_to_pos.insert(f.id, pos).is_some() {
                return Err(Error::data(format!("duplicate feature id {}", f.id)));
            }
            class_index.entry(f.label).or_default().push(f.id);
        }
        Ok(FeatureCorpus {
            dim,
            features,
            class_index,
            id_to_pos,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[LabeledFeature] {
        &self.features
    }

    pub fn by_id(&self, id: u32) -> Option<&LabeledFeature> {
        self.id_to_pos.get(&id).map(|&pos| &self.features[pos])
    }

    /// Class labels in ascending order.
    pub fn labels(&self) -> Vec<u32> {
        self.class_index.keys().copied().collect()
    }

    /// Member ids of one class, in insertion order.
    pub fn class_members(&self, label: u32) -> Option<&[u32]> {
        self.class_index.get(&label).map(|v| v.as_slice())
    }

    /// Labels that have at least one feature in the given role, ascending.
    pub fn labels_with_role(&self, role: Role) -> Vec<u32> {
        self.class_index
            .iter()
            .filter(|(_, ids)| {
                ids.iter()
                    .any(|id| self.by_id(*id).map(|f| f.role == role).unwrap_or(false))
            })
            .map(|(label, _)| *label)
            .collect()
    }

    /// Ids of one class restricted to a role, ascending by id.
    pub fn class_members_with_role(&self, label: u32, role: Role) -> Vec<u32> {
        let mut ids: Vec<u32> = self
            .class_index
            .get(&label)
            .map(|v| {
                v.iter()
                    .copied()
                    .filter(|id| self.by_id(*id).map(|f| f.role == role).unwrap_or(false))
                    .collect()
            })
            .unwrap_or_default();
        ids.sort_unstable();
        ids
    }

    /// All features of one role, in corpus order.
    pub fn with_role(&self, role: Role) -> Vec<&LabeledFeature> {
        self.features.iter().filter(|f| f.role == role).collect()
    }

    /// Materialize a matrix (and aligned labels/ids) from a list of features.
    pub fn to_matrix(features: &[&LabeledFeature]) -> Result<(Matrix, Vec<u32>, Vec<u32>)> {
        if features.is_empty() {
            return Err(Error::data("cannot materialize an empty feature set"));
        }
        let dim = features[0].values.len();
        let mut m = Matrix::zeros(features.len(), dim)?;
        let mut labels = Vec::with_capacity(features.len());
        let mut ids = Vec::with_capacity(features.len());
        for (r, f) in features.iter().enumerate() {
            m.row_mut(r).copy_from_slice(&f.values);
            labels.push(f.label);
            ids.push(f.id);
        }
        Ok((m, labels, ids))
    }

    /// Replace the role of the feature with the given id.
    fn set_role(&mut self, id: u32, role: Role) {
        if let Some(&pos) = self.id_to_pos.get(&id) {
            self.features[pos].role = role;
        }
    }
}

/// Original-feature regime emulated by the generator.
///
/// `DisFeat` has both a wider class-center spread (higher discriminability)
/// and a wider intra-class spread (lower compactness) than `SimDisFeat`;
/// `SimFeat` narrows the center spread instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    SimDisFeat,
    SimFeat,
    DisFeat,
}

impl Profile {
    /// Calibrated (center spread, intra-class spread) for this profile.
    pub fn spreads(self) -> (f64, f64) {
        match self {
            Profile::SimDisFeat => (1.0, 0.35),
            Profile::SimFeat => (0.6, 0.35),
            Profile::DisFeat => (1.4, 0.8),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Profile::SimDisFeat => "simdis",
            Profile::SimFeat => "sim",
            Profile::DisFeat => "dis",
        }
    }
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "simdis" | "simdisfeat" => Ok(Profile::SimDisFeat),
            "sim" | "simfeat" => Ok(Profile::SimFeat),
            "dis" | "disfeat" => Ok(Profile::DisFeat),
            other => Err(Error::domain(format!(
                "unknown profile '{other}' (expected simdis, sim, or dis)"
            ))),
        }
    }
}

/// Parameters of the synthetic Gaussian-mixture generator.
#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub num_classes: usize,
    pub dim: usize,
    pub samples_per_class: usize,
    /// Standard deviation of class centers around the origin.
    pub center_spread: f64,
    /// Standard deviation of samples around their class center.
    pub intra_spread: f64,
    pub profile: Profile,
    pub seed: u64,
}

impl SynthSpec {
    /// Spec with the profile's calibrated spreads.
    pub fn new(profile: Profile, num_classes: usize, dim: usize, samples_per_class: usize, seed: u64) -> Self {
        let (center_spread, intra_spread) = profile.spreads();
        SynthSpec {
            num_classes,
            dim,
            samples_per_class,
            center_spread,
            intra_spread,
            profile,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_classes == 0 || self.dim == 0 || self.samples_per_class == 0 {
            return Err(Error::domain("classes, dim, and samples per class must be >= 1"));
        }
        if self.center_spread <= 0.0 || self.intra_spread <= 0.0 {
            return Err(Error::domain("spreads must be positive"));
        }
        Ok(())
    }
}

/// Draw a synthetic corpus: per class a center with coordinates
/// `Normal(0, center_spread^2)`, then samples `center + Normal(0,
/// intra_spread^2)` noise. Every sample gets role `Train`. Deterministic
/// given `spec.seed`.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<FeatureCorpus> {
    spec.validate()?;
    let mut rng = Rng::new(spec.seed);
    generate_into(spec, spec.samples_per_class, &mut rng)
}

fn generate_into(spec: &SynthSpec, per_class: usize, rng: &mut Rng) -> Result<FeatureCorpus> {
    let mut features = Vec::with_capacity(spec.num_classes * per_class);
    let mut next_id: u32 = 0;
    for label in 0..spec.num_classes as u32 {
        let center: Vec<f64> = (0..spec.dim)
            .map(|_| rng.standard_normal() * spec.center_spread)
            .collect();
        for _ in 0..per_class {
            let values: Vec<f64> = center
                .iter()
                .map(|c| c + rng.standard_normal() * spec.intra_spread)
                .collect();
            features.push(LabeledFeature {
                id: next_id,
                label,
                role: Role::Train,
                values,
            });
            next_id += 1;
        }
    }
    FeatureCorpus::new(spec.dim, features)
}

/// Reassign every feature of the corpus to Query or Gallery: per class,
/// `ceil(query_fraction * n)` samples (at least 1, at most n-1) become
/// queries and the rest gallery. Every class needs at least 2 samples.
pub fn split_query_gallery(
    corpus: &FeatureCorpus,
    query_fraction: f64,
    rng: &mut Rng,
) -> Result<FeatureCorpus> {
    if !(0.0..=1.0).contains(&query_fraction) {
        return Err(Error::domain(format!(
            "query fraction must be in [0, 1], got {query_fraction}"
        )));
    }
    let mut out = corpus.clone();
    for label in corpus.labels() {
        let members: Vec<u32> = {
            let mut ids = corpus.class_members(label).unwrap_or(&[]).to_vec();
            ids.sort_unstable();
            ids
        };
        let n = members.len();
        if n < 2 {
            return Err(Error::data(format!(
                "class {label} has {n} evaluation samples, need at least 2 to split"
            )));
        }
        let q = ((query_fraction * n as f64).ceil() as usize).clamp(1, n - 1);
        let chosen = rng.choose_without_replacement(n, q);
        let mut is_query = vec![false; n];
        for c in chosen {
            is_query[c] = true;
        }
        for (i, id) in members.iter().enumerate() {
            out.set_role(*id, if is_query[i] { Role::Query } else { Role::Gallery });
        }
    }
    Ok(out)
}

/// Generate a corpus carrying both training and evaluation features: per
/// class, `spec.samples_per_class` samples stay `Train` and `eval_per_class`
/// extra samples are split into Query/Gallery by `query_fraction`. A single
/// generator stream (seeded from `spec.seed`) drives generation and the
/// query selection, so the whole corpus is determined by the spec.
pub fn generate_with_eval(
    spec: &SynthSpec,
    eval_per_class: usize,
    query_fraction: f64,
) -> Result<FeatureCorpus> {
    spec.validate()?;
    if eval_per_class == 0 {
        return generate_synthetic(spec);
    }
    if eval_per_class < 2 {
        return Err(Error::domain(
            "need at least 2 evaluation samples per class to form query and gallery",
        ));
    }
    if !(0.0..=1.0).contains(&query_fraction) {
        return Err(Error::domain(format!(
            "query fraction must be in [0, 1], got {query_fraction}"
        )));
    }
    let mut rng = Rng::new(spec.seed);
    let per_class = spec.samples_per_class + eval_per_class;
    let mut corpus = generate_into(spec, per_class, &mut rng)?;
    let q = ((query_fraction * eval_per_class as f64).ceil() as usize).clamp(1, eval_per_class - 1);
    for label in corpus.labels() {
        let mut members = corpus.class_members(label).unwrap_or(&[]).to_vec();
        members.sort_unstable();
        // the generated tail of each class becomes the evaluation set
        let eval_ids: Vec<u32> = members[spec.samples_per_class..].to_vec();
        let chosen = rng.choose_without_replacement(eval_per_class, q);
        let mut is_query = vec![false; eval_per_class];
        for c in chosen {
            is_query[c] = true;
        }
        for (i, id) in eval_ids.iter().enumerate() {
            corpus.set_role(*id, if is_query[i] { Role::Query } else { Role::Gallery });
        }
    }
    Ok(corpus)
}

/// Sample `n_pos` same-class and `n_neg` cross-class unordered id pairs,
/// without duplicates, uniformly from the full candidate sets.
pub fn make_verification_pairs(
    corpus: &FeatureCorpus,
    n_pos: usize,
    n_neg: usize,
    rng: &mut Rng,
) -> Result<Vec<(u32, u32, bool)>> {
    let mut pos_candidates: Vec<(u32, u32)> = Vec::new();
    let mut neg_candidates: Vec<(u32, u32)> = Vec::new();
    let mut sorted_ids: Vec<(u32, u32)> = corpus
        .features()
        .iter()
        .map(|f| (f.id, f.label))
        .collect();
    sorted_ids.sort_unstable();
    for i in 0..sorted_ids.len() {
        for j in (i + 1)..sorted_ids.len() {
            let (ia, la) = sorted_ids[i];
            let (ib, lb) = sorted_ids[j];
            if la == lb {
                pos_candidates.push((ia, ib));
            } else {
                neg_candidates.push((ia, ib));
            }
        }
    }
    if pos_candidates.len() < n_pos {
        return Err(Error::data(format!(
            "requested {n_pos} positive pairs but only {} exist",
            pos_candidates.len()
        )));
    }
    if neg_candidates.len() < n_neg {
        return Err(Error::data(format!(
            "requested {n_neg} negative pairs but only {} exist",
            neg_candidates.len()
        )));
    }
    let mut pairs = Vec::with_capacity(n_pos + n_neg);
    for idx in rng.choose_without_replacement(pos_candidates.len(), n_pos) {
        let (a, b) = pos_candidates[idx];
        pairs.push((a, b, true));
    }
    for idx in rng.choose_without_replacement(neg_candidates.len(), n_neg) {
        let (a, b) = neg_candidates[idx];
        pairs.push((a, b, false));
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::discriminability_stats;
    use std::collections::BTreeSet;

    fn tiny_corpus() -> FeatureCorpus {
        let features = vec![
            LabeledFeature { id: 0, label: 0, role: Role::Train, values: vec![0.0, 0.0] },
            LabeledFeature { id: 1, label: 0, role: Role::Train, values: vec![0.1, 0.0] },
            LabeledFeature { id: 2, label: 1, role: Role::Train, values: vec![5.0, 5.0] },
            LabeledFeature { id: 3, label: 1, role: Role::Train, values: vec![5.1, 5.0] },
        ];
        FeatureCorpus::new(2, features).unwrap()
    }

    #[test]
    fn corpus_rejects_duplicates_and_bad_dims() {
        let f = |id, label, values: Vec<f64>| LabeledFeature { id, label, role: Role::Train, values };
        assert!(FeatureCorpus::new(2, vec![f(0, 0, vec![1.0]), ]).is_err());
        assert!(FeatureCorpus::new(2, vec![f(0, 0, vec![1.0, 2.0]), f(0, 1, vec![3.0, 4.0])]).is_err());
        assert!(FeatureCorpus::new(2, vec![f(0, 0, vec![f64::NAN, 0.0])]).is_err());
    }

    #[test]
    fn class_index_consistent() {
        let c = tiny_corpus();
        assert_eq!(c.labels(), vec![0, 1]);
        assert_eq!(c.class_members(0).unwrap(), &[0, 1]);
        assert_eq!(c.class_members(1).unwrap(), &[2, 3]);
    }

    #[test]
    fn generator_is_deterministic() {
        let spec = SynthSpec::new(Profile::SimDisFeat, 4, 8, 5, 99);
        let a = generate_synthetic(&spec).unwrap();
        let b = generate_synthetic(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 20);
        assert!(a.features().iter().all(|f| f.role == Role::Train));
    }

    #[test]
    fn tight_intra_spread_concentrates_classes() {
        // with a tiny intra spread all samples of a class sit at its center
        let mut spec = SynthSpec::new(Profile::SimDisFeat, 3, 6, 4, 7);
        spec.intra_spread = 1e-12;
        let corpus = generate_synthetic(&spec).unwrap();
        for label in corpus.labels() {
            let ids = corpus.class_members(label).unwrap();
            let first = &corpus.by_id(ids[0]).unwrap().values;
            for id in ids {
                let v = &corpus.by_id(*id).unwrap().values;
                for (a, b) in first.iter().zip(v.iter()) {
                    assert!((a - b).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn profile_ratio_ordering() {
        // DisFeat must show a higher inter/intra ratio than SimFeat
        let make = |profile| {
            let spec = SynthSpec::new(profile, 16, 64, 20, 1234);
            let corpus = generate_synthetic(&spec).unwrap();
            let all: Vec<&LabeledFeature> = corpus.features().iter().collect();
            let (m, labels, _) = FeatureCorpus::to_matrix(&all).unwrap();
            discriminability_stats(&m, &labels).unwrap().ratio.unwrap()
        };
        let dis = make(Profile::DisFeat);
        let sim = make(Profile::SimFeat);
        assert!(dis > sim, "DisFeat ratio {dis} should exceed SimFeat ratio {sim}");
    }

    #[test]
    fn wider_center_spread_does_not_reduce_ratio() {
        let ratio_for = |center_spread: f64| {
            let mut spec = SynthSpec::new(Profile::SimDisFeat, 8, 32, 10, 77);
            spec.center_spread = center_spread;
            let corpus = generate_synthetic(&spec).unwrap();
            let all: Vec<&LabeledFeature> = corpus.features().iter().collect();
            let (m, labels, _) = FeatureCorpus::to_matrix(&all).unwrap();
            discriminability_stats(&m, &labels).unwrap().ratio.unwrap()
        };
        // same seed: identical normal draws, scaled centers
        let mut prev = ratio_for(0.25);
        for spread in [0.5, 1.0, 2.0, 4.0] {
            let r = ratio_for(spread);
            assert!(r >= prev, "ratio decreased from {prev} to {r} at spread {spread}");
            prev = r;
        }
    }

    #[test]
    fn split_assigns_each_class_completely() {
        let corpus = tiny_corpus();
        let mut rng = Rng::new(5);
        let split = split_query_gallery(&corpus, 0.5, &mut rng).unwrap();
        for label in split.labels() {
            let queries = split.class_members_with_role(label, Role::Query);
            let gallery = split.class_members_with_role(label, Role::Gallery);
            assert_eq!(queries.len(), 1);
            assert_eq!(gallery.len(), 1);
            let all: BTreeSet<u32> = queries.iter().chain(gallery.iter()).copied().collect();
            assert_eq!(all.len(), 2);
        }
    }

    #[test]
    fn split_ceiling_arithmetic() {
        let mut features = Vec::new();
        for i in 0..8u32 {
            features.push(LabeledFeature { id: i, label: 0, role: Role::Train, values: vec![i as f64] });
        }
        let corpus = FeatureCorpus::new(1, features).unwrap();
        let mut rng = Rng::new(1);
        let split = split_query_gallery(&corpus, 0.25, &mut rng).unwrap();
        assert_eq!(split.class_members_with_role(0, Role::Query).len(), 2);
        assert_eq!(split.class_members_with_role(0, Role::Gallery).len(), 6);
    }

    #[test]
    fn split_rejects_singleton_class() {
        let features = vec![
            LabeledFeature { id: 0, label: 0, role: Role::Train, values: vec![0.0] },
        ];
        let corpus = FeatureCorpus::new(1, features).unwrap();
        let mut rng = Rng::new(1);
        assert!(split_query_gallery(&corpus, 0.5, &mut rng).is_err());
    }

    #[test]
    fn generate_with_eval_partitions_roles() {
        let spec = SynthSpec::new(Profile::SimDisFeat, 4, 8, 6, 42);
        let corpus = generate_with_eval(&spec, 4, 0.5).unwrap();
        assert_eq!(corpus.len(), 4 * 10);
        for label in corpus.labels() {
            assert_eq!(corpus.class_members_with_role(label, Role::Train).len(), 6);
            assert_eq!(corpus.class_members_with_role(label, Role::Query).len(), 2);
            assert_eq!(corpus.class_members_with_role(label, Role::Gallery).len(), 2);
        }
        // deterministic
        let again = generate_with_eval(&spec, 4, 0.5).unwrap();
        assert_eq!(corpus, again);
    }

    #[test]
    fn verification_pairs_exhaustive_case() {
        let corpus = tiny_corpus();
        let mut rng = Rng::new(9);
        let pairs = make_verification_pairs(&corpus, 2, 4, &mut rng).unwrap();
        let pos: BTreeSet<(u32, u32)> = pairs.iter().filter(|p| p.2).map(|p| (p.0, p.1)).collect();
        let neg: BTreeSet<(u32, u32)> = pairs.iter().filter(|p| !p.2).map(|p| (p.0, p.1)).collect();
        assert_eq!(pos, BTreeSet::from([(0, 1), (2, 3)]));
        assert_eq!(neg, BTreeSet::from([(0, 2), (0, 3), (1, 2), (1, 3)]));
    }

    #[test]
    fn verification_pairs_flags_and_uniqueness() {
        let spec = SynthSpec::new(Profile::SimDisFeat, 5, 4, 6, 3);
        let corpus = generate_synthetic(&spec).unwrap();
        let mut rng = Rng::new(10);
        let pairs = make_verification_pairs(&corpus, 20, 30, &mut rng).unwrap();
        assert_eq!(pairs.len(), 50);
        let mut seen = BTreeSet::new();
        for (a, b, same) in &pairs {
            assert_ne!(a, b);
            assert!(seen.insert((*a, *b)), "duplicate pair ({a},{b})");
            let la = corpus.by_id(*a).unwrap().label;
            let lb = corpus.by_id(*b).unwrap().label;
            assert_eq!(*same, la == lb);
        }
    }

    #[test]
    fn verification_pairs_none_positive() {
        let corpus = tiny_corpus();
        let mut rng = Rng::new(2);
        let pairs = make_verification_pairs(&corpus, 0, 3, &mut rng).unwrap();
        assert!(pairs.iter().all(|p| !p.2));
    }
}

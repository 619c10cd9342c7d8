//! Fixtures and brute-force oracles for tests. Enabled by the `testkit`
//! feature.
//!
//! The oracles here deliberately avoid the library's own search and
//! aggregation code paths: plain loops, full sorts, no heaps.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::corpus::ImageRecord;
use crate::eval::{Criterion, KeyEntry, PreferenceRecord, Preferred, SystemTag};

/// Rows of i.i.d. standard normal entries, scaled to unit length.
pub fn random_unit_rows(n: usize, dim: usize, seed: u64) -> Vec<Vec<f32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter().map(|x| (x / norm) as f32).collect()
        })
        .collect()
}

/// Two Gaussian blobs around antipodal unit centers with spread `sigma` per
/// coordinate. Returns the rows and the blob (0 or 1) of each row.
pub fn two_clusters(n_per_cluster: usize, dim: usize, sigma: f64, seed: u64) -> (Vec<Vec<f32>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center: Vec<f64> = {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / norm).collect()
    };
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..2 * n_per_cluster {
        let blob = i % 2;
        let sign = if blob == 0 { 1.0 } else { -1.0 };
        let row = center
            .iter()
            .map(|c| (sign * c + sigma * rng.sample::<f64, _>(StandardNormal)) as f32)
            .collect();
        rows.push(row);
        labels.push(blob);
    }
    (rows, labels)
}

/// Two blobs around antipodal unit centers. The spread of each blob lies
/// mostly in its own random `latent_dim`-dimensional subspace (per-axis
/// spread `sigma`), plus isotropic noise `noise` in every coordinate.
#[derive(Debug, Clone)]
pub struct LowRankClusters {
    center: Vec<f64>,
    bases: [Vec<Vec<f64>>; 2],
    sigma: f64,
    noise: f64,
}

fn unit_f64(v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

impl LowRankClusters {
    pub fn new(dim: usize, latent_dim: usize, sigma: f64, noise: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let center = unit_f64(gaussian_vec(&mut rng, dim));
        let mut basis = || -> Vec<Vec<f64>> {
            (0..latent_dim).map(|_| unit_f64(gaussian_vec(&mut rng, dim))).collect()
        };
        let bases = [basis(), basis()];
        Self {
            center,
            bases,
            sigma,
            noise,
        }
    }

    /// `2 * n_per_cluster` rows alternating between the blobs, with the blob
    /// of each row.
    pub fn sample(&self, n_per_cluster: usize, seed: u64) -> (Vec<Vec<f32>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = self.center.len();
        let mut rows = Vec::with_capacity(2 * n_per_cluster);
        let mut labels = Vec::with_capacity(2 * n_per_cluster);
        for i in 0..2 * n_per_cluster {
            let blob = i % 2;
            let sign = if blob == 0 { 1.0 } else { -1.0 };
            let z = gaussian_vec(&mut rng, self.bases[blob].len());
            let eps = gaussian_vec(&mut rng, dim);
            let row = (0..dim)
                .map(|d| {
                    let latent: f64 = z.iter().zip(&self.bases[blob]).map(|(zl, b)| zl * b[d]).sum();
                    (sign * self.center[d] + self.sigma * latent + self.noise * eps[d]) as f32
                })
                .collect();
            rows.push(row);
            labels.push(blob);
        }
        (rows, labels)
    }
}

pub fn row_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("img{i:06}")).collect()
}

/// Exhaustive top-`k` cosine scan: normalize both sides, score every row,
/// sort everything by (score desc, id asc).
pub fn brute_force_knn<R: AsRef<[f32]>>(rows: &[R], ids: &[String], query: &[f32], k: usize) -> Vec<(String, f64)> {
    let unit = |v: &[f32]| -> Vec<f64> {
        let norm = v.iter().map(|x| (*x as f64) * (*x as f64)).sum::<f64>().sqrt();
        v.iter().map(|x| *x as f64 / norm).collect()
    };
    let q = unit(query);
    let mut all: Vec<(String, f64)> = rows
        .iter()
        .zip(ids)
        .map(|(row, id)| {
            // Stored rows live in f32 after normalization.
            let r: Vec<f64> = unit(row.as_ref()).iter().map(|x| *x as f32 as f64).collect();
            let mut s = 0.0;
            for i in 0..q.len() {
                s += r[i] * q[i];
            }
            (id.clone(), s)
        })
        .collect();
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

/// Per-code (count, best score) over the hit images, tallied by hand.
pub fn brute_force_tally(
    hits: &[(String, f64)],
    records: &[ImageRecord],
) -> BTreeMap<String, (usize, f64)> {
    let mut out: BTreeMap<String, (usize, f64)> = BTreeMap::new();
    for (id, score) in hits {
        let record = records.iter().find(|r| &r.image_id == id).expect("hit in corpus");
        for code in &record.notations {
            let entry = out.entry(code.clone()).or_insert((0, f64::NEG_INFINITY));
            entry.0 += 1;
            if *score > entry.1 {
                entry.1 = *score;
            }
        }
    }
    out
}

/// Codes ordered by (count desc, best score desc, code asc).
pub fn brute_force_ranking(tally: &BTreeMap<String, (usize, f64)>) -> Vec<String> {
    let mut codes: Vec<(&String, &(usize, f64))> = tally.iter().collect();
    codes.sort_by(|a, b| {
        b.1 .0
            .cmp(&a.1 .0)
            .then(b.1 .1.partial_cmp(&a.1 .1).unwrap())
            .then(a.0.cmp(b.0))
    });
    codes.into_iter().map(|(c, _)| c.clone()).collect()
}

/// Three notation labels with hand-computable TF-IDF weights.
pub fn f1_docs() -> Vec<(&'static str, &'static str)> {
    vec![
        ("25I141", "street"),
        ("31D14", "adult man"),
        ("31D15", "adult woman; woman and child"),
    ]
}

/// Scheme covering the street scenario and the F1 labels.
pub const STREET_SCHEME: &str = "\
# code\tlabel
1\tReligion and Magic
11\tChristian religion
11H\tsaints
11H(PAUL)\tthe apostle Paul
2\tNature
25\tearth, world as celestial body
25I\tcity-view, and landscape with man-made constructions
25I1\tcity-view in general; 'veduta'
25I14\tsquare, place, circus, etc.
25I141\tstreet
3\tHuman being, Man in general
31\tman in a general sense
31A\tthe human figure
31D\tages of man
31D1\tadults
31D14\tadult man
31D15\tadult woman; woman and child
34\tman and animals
34B\tdomestic animals; pets
34B1\tdogs
34B11\tdog
4\tSociety, Civilization, Culture
41\tmaterial aspects of daily life
41A\thousing
";

pub const STREET_DIM: usize = 8;

/// Annotated corpus in which the ten images nearest to the "street" query
/// carry 25I141 eight times, 31D14 five times and 34B11 three times. Six
/// further images point away from the query and carry 34B11 and 11H(PAUL).
///
/// Returns `(rows, records, street_query_vector)`.
pub fn street_corpus() -> (Vec<Vec<f32>>, Vec<ImageRecord>, Vec<f32>) {
    let near: [&[&str]; 10] = [
        &["25I141", "25I14"],
        &["25I141", "31D14"],
        &["25I141", "34B11"],
        &["25I141", "31D14"],
        &["25I141", "31A"],
        &["25I141", "31D14"],
        &["25I141", "34B11"],
        &["25I141", "31D14"],
        &["34B11", "25I"],
        &["31D14", "41A"],
    ];
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for (i, codes) in near.iter().enumerate() {
        let mut v = vec![0.0f32; STREET_DIM];
        v[0] = 1.0;
        v[1 + i % (STREET_DIM - 1)] = 0.05 * (i + 1) as f32;
        rows.push(v);
        records.push(ImageRecord {
            image_id: format!("street-{:02}", i + 1),
            embedding_row: i,
            notations: codes.iter().map(|c| c.to_string()).collect(),
            source_uri: Some(format!("https://images.example.org/street-{:02}.jpg", i + 1)),
        });
    }
    for j in 0..6 {
        let mut v = vec![0.0f32; STREET_DIM];
        v[0] = -0.5;
        v[1 + j] = 1.0;
        let row = rows.len();
        rows.push(v);
        records.push(ImageRecord {
            image_id: format!("other-{:02}", j + 1),
            embedding_row: row,
            notations: vec!["34B11".into(), "11H(PAUL)".into()],
            source_uri: None,
        });
    }
    let mut query = vec![0.0f32; STREET_DIM];
    query[0] = 1.0;
    (rows, records, query)
}

/// Blinded key and left/right responses that unblind to
/// A = (105, 64, 30) and B = (104, 72, 17): 25 rows × 10 judges, 41
/// responses without preference and 26 preferences without criterion.
pub fn survey_fixture() -> (Vec<KeyEntry>, Vec<PreferenceRecord>) {
    let n_rows = 25;
    let key: Vec<KeyEntry> = (1..=n_rows)
        .map(|row_id| KeyEntry {
            row_id,
            left_is: if row_id % 3 == 0 { SystemTag::B } else { SystemTag::A },
        })
        .collect();
    let left_of: HashMap<usize, SystemTag> = key.iter().map(|k| (k.row_id, k.left_is)).collect();

    // (system, criterion, how many)
    let plan: [(Option<SystemTag>, Option<Criterion>, usize); 7] = [
        (Some(SystemTag::A), Some(Criterion::Preciseness), 64),
        (Some(SystemTag::A), Some(Criterion::Exhaustiveness), 30),
        (Some(SystemTag::A), None, 11),
        (Some(SystemTag::B), Some(Criterion::Preciseness), 72),
        (Some(SystemTag::B), Some(Criterion::Exhaustiveness), 17),
        (Some(SystemTag::B), None, 15),
        (None, None, 41),
    ];
    let mut judgments: Vec<(Option<SystemTag>, Option<Criterion>)> = Vec::new();
    for (system, criterion, count) in plan {
        judgments.extend(std::iter::repeat_n((system, criterion), count));
    }
    // Spread judgments over rows with a fixed stride so every row gets ten.
    let total = judgments.len();
    assert_eq!(total, n_rows * 10);
    let mut responses = Vec::with_capacity(total);
    for i in 0..total {
        let (system, criterion) = judgments[(i * 7) % total];
        let row_id = i % n_rows + 1;
        let preferred = match system {
            None => Preferred::None,
            Some(tag) if left_of[&row_id] == tag => Preferred::Left,
            Some(_) => Preferred::Right,
        };
        responses.push(PreferenceRecord {
            row_id,
            preferred,
            criterion,
        });
    }
    (key, responses)
}
